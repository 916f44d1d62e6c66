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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace orchestra {

enum class SpecialistKind : std::uint8_t { Grammar = 0, Knowledge = 1, Reasoning = 2, Generalist = 3 };
enum class TaskType : std::uint8_t { InformationRetrieval = 0, ProblemSolving = 1, Creative = 2 };

inline constexpr std::array<SpecialistKind, 4> kAllKinds = {
    SpecialistKind::Grammar, SpecialistKind::Knowledge, SpecialistKind::Reasoning,
    SpecialistKind::Generalist};
inline constexpr std::array<TaskType, 3> kAllTaskTypes = {
    TaskType::InformationRetrieval, TaskType::ProblemSolving, TaskType::Creative};

std::string_view to_string(SpecialistKind k);
std::string_view to_string(TaskType t);
std::optional<SpecialistKind> parse_kind(std::string_view s);
std::optional<TaskType> parse_task_type(std::string_view s);

/// Capability-matrix column that tracks a task type.
inline int task_column(TaskType t) { return static_cast<int>(t); }

}  // namespace orchestra
