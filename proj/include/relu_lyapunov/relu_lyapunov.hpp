#pragma once

#include "relu_lyapunov/errors.hpp"
#include "relu_lyapunov/numerics.hpp"
#include "relu_lyapunov/arch.hpp"
#include "relu_lyapunov/activation.hpp"
#include "relu_lyapunov/network.hpp"
#include "relu_lyapunov/risk.hpp"
#include "relu_lyapunov/gradient.hpp"
#include "relu_lyapunov/lyapunov.hpp"
#include "relu_lyapunov/optimize.hpp"
#include "relu_lyapunov/convexity.hpp"
#include "relu_lyapunov/experiments.hpp"
