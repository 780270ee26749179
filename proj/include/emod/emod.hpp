#pragma once

#include "emod/approximation.hpp"
#include "emod/ball_kernel.hpp"
#include "emod/core_math.hpp"
#include "emod/fibered.hpp"
#include "emod/harmonic.hpp"
#include "emod/jacobi.hpp"
#include "emod/kfunctional.hpp"
#include "emod/mz.hpp"
#include "emod/panels.hpp"
#include "emod/polynomial.hpp"
#include "emod/quadrature.hpp"
#include "emod/rates.hpp"
#include "emod/smoothness.hpp"
#include "emod/verify.hpp"
#include "emod/version.hpp"
