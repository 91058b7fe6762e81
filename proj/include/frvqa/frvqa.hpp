// Copyright 2026 The FRVQA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "frvqa/aggregate.hpp"
#include "frvqa/calibration.hpp"
#include "frvqa/codec.hpp"
#include "frvqa/evaluation.hpp"
#include "frvqa/frame_metrics.hpp"
#include "frvqa/inference.hpp"
#include "frvqa/labeling.hpp"
#include "frvqa/nn.hpp"
#include "frvqa/patch.hpp"
#include "frvqa/proxy.hpp"
#include "frvqa/stats.hpp"
#include "frvqa/svg.hpp"
#include "frvqa/synthetic.hpp"
#include "frvqa/trainer.hpp"
#include "frvqa/util.hpp"
#include "frvqa/video.hpp"
