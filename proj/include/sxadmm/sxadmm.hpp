#ifndef SXADMM_SXADMM_HPP_
#define SXADMM_SXADMM_HPP_

#include "sxadmm/admm.hpp"
#include "sxadmm/bench.hpp"
#include "sxadmm/cost_model.hpp"
#include "sxadmm/decomposition.hpp"
#include "sxadmm/generators.hpp"
#include "sxadmm/io.hpp"
#include "sxadmm/stacked.hpp"
#include "sxadmm/structure.hpp"
#include "sxadmm/tuning.hpp"
#include "sxadmm/types.hpp"

#endif  // SXADMM_SXADMM_HPP_
