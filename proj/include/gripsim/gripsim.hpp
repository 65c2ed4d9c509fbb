// Copyright 2026 The gripsim Authors
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

#include "gripsim/config.hpp"
#include "gripsim/csv.hpp"
#include "gripsim/experiments.hpp"
#include "gripsim/grasp_stability.hpp"
#include "gripsim/gripper.hpp"
#include "gripsim/pipeline.hpp"
#include "gripsim/protocol.hpp"
#include "gripsim/scene.hpp"
#include "gripsim/simulation.hpp"
#include "gripsim/telemetry_server.hpp"
#include "gripsim/thermal.hpp"
