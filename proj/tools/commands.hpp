#pragma once

#include "pspin/config.hpp"

namespace pspin::cli {

int cmd_spectrum(const ExperimentConfig& cfg);
int cmd_optimize(const ExperimentConfig& cfg);
int cmd_follow(const ExperimentConfig& cfg);
int cmd_stability(const ExperimentConfig& cfg);
int cmd_events(const ExperimentConfig& cfg);
int cmd_chain_verify(const ExperimentConfig& cfg);
int cmd_calibrate(const ExperimentConfig& cfg);

}  // namespace pspin::cli
