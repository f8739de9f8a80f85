#pragma once

#include "iep/chain_model.hpp"
#include "iep/dense_oracle.hpp"
#include "iep/errors.hpp"
#include "iep/forward_solver.hpp"
#include "iep/numerics.hpp"
#include "iep/real.hpp"
#include "iep/spectrum_plan.hpp"
#include "iep/synthesis.hpp"
#include "iep/verifier.hpp"
