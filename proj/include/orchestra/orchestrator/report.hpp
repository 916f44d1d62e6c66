// Copyright 2026 The Orchestra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <string>
#include <vector>

#include "orchestra/orchestrator/experiment.hpp"

namespace orchestra {

/// Writes every table of a report into dir (created if needed):
///   summary.csv, windows.csv, handoff_curve.csv, failures.csv, stats.csv,
///   events.csv, totals_<variant>.json, conversations_<variant>.jsonl,
///   config.ini
/// Latencies are logical milliseconds (1 tick = 100 ms).
void write_report(const ExperimentReport& rep, const std::string& dir);
void write_sweep(const SweepReport& rep, const std::string& dir);

/// Rebuilds a report from the logs write_report left in dir.
ExperimentReport load_report(const std::string& dir);

std::string summary_csv(const ExperimentReport& rep);
std::string windows_csv(const ExperimentReport& rep);
std::string handoff_curve_csv(const ExperimentReport& rep);
std::string failures_csv(const ExperimentReport& rep);
std::string stats_csv(const ExperimentReport& rep);
std::string events_csv(const ExperimentReport& rep);
std::string sweep_csv(const SweepReport& rep);

}  // namespace orchestra
