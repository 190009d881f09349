// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mmimo/allocation.hpp"
#include "mmimo/closedform.hpp"
#include "mmimo/config_json.hpp"
#include "mmimo/experiment.hpp"
#include "mmimo/hypoexp.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/network.hpp"
#include "mmimo/rng.hpp"
#include "mmimo/special.hpp"
#include "mmimo/topology.hpp"
#include "mmimo/zf.hpp"
