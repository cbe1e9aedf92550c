// Copyright 2026 The featborrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the library (everything except the CLI front end).

#pragma once

#include "featborrow/anchors.hpp"
#include "featborrow/autograd.hpp"
#include "featborrow/config.hpp"
#include "featborrow/detection_layers.hpp"
#include "featborrow/error.hpp"
#include "featborrow/ffb.hpp"
#include "featborrow/fmb.hpp"
#include "featborrow/frb.hpp"
#include "featborrow/ingest.hpp"
#include "featborrow/init.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/rf_calc.hpp"
#include "featborrow/rng.hpp"
#include "featborrow/tensor.hpp"
#include "featborrow/tensor_file.hpp"
