#pragma once

#include "caresim/behavior_text.hpp"
#include "caresim/chat_client.hpp"
#include "caresim/environment.hpp"
#include "caresim/error.hpp"
#include "caresim/evaluation.hpp"
#include "caresim/plwd_model.hpp"
#include "caresim/qlearning.hpp"
#include "caresim/reward.hpp"
#include "caresim/rng.hpp"
#include "caresim/scenario.hpp"
#include "caresim/simulation.hpp"
#include "caresim/status.hpp"
#include "caresim/training.hpp"

namespace caresim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace caresim
