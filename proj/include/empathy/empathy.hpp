// Copyright 2026 The Empathic Games Authors.
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

// Umbrella header.

#ifndef EMPATHY_EMPATHY_HPP_
#define EMPATHY_EMPATHY_HPP_

#include "empathy/bvp.hpp"
#include "empathy/dataset.hpp"
#include "empathy/domain.hpp"
#include "empathy/estimation.hpp"
#include "empathy/experiments.hpp"
#include "empathy/io.hpp"
#include "empathy/parallel.hpp"
#include "empathy/planner.hpp"
#include "empathy/pmp_check.hpp"
#include "empathy/sim.hpp"
#include "empathy/surrogate_io.hpp"
#include "empathy/trajectory_io.hpp"
#include "empathy/value_net.hpp"

#endif  // EMPATHY_EMPATHY_HPP_
