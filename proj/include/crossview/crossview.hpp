/* Copyright 2026 The crossview Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CROSSVIEW_CROSSVIEW_HPP_
#define CROSSVIEW_CROSSVIEW_HPP_

#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"
#include "crossview/frustum.hpp"
#include "crossview/losses.hpp"
#include "crossview/matching.hpp"
#include "crossview/reid_eval.hpp"
#include "crossview/metrics.hpp"
#include "crossview/synthgen.hpp"
#include "crossview/estimator3d.hpp"
#include "crossview/pipeline.hpp"

#endif  // CROSSVIEW_CROSSVIEW_HPP_
