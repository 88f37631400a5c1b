#pragma once

#include "spde_cov/advdiff.hpp"
#include "spde_cov/config.hpp"
#include "spde_cov/errnorms.hpp"
#include "spde_cov/error.hpp"
#include "spde_cov/fem1d.hpp"
#include "spde_cov/kernels.hpp"
#include "spde_cov/linalg.hpp"
#include "spde_cov/montecarlo.hpp"
#include "spde_cov/parallel.hpp"
#include "spde_cov/quadrature.hpp"
#include "spde_cov/spectral_oracle.hpp"
#include "spde_cov/study.hpp"
#include "spde_cov/wave.hpp"
