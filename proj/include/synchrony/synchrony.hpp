// Copyright 2026 The Synchrony Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Convenience header pulling in the whole library.

#pragma once

#include "synchrony/config.hpp"
#include "synchrony/csv.hpp"
#include "synchrony/dataset_io.hpp"
#include "synchrony/datagen.hpp"
#include "synchrony/error.hpp"
#include "synchrony/harness.hpp"
#include "synchrony/ingest.hpp"
#include "synchrony/lstm.hpp"
#include "synchrony/metrics.hpp"
#include "synchrony/model.hpp"
#include "synchrony/model_io.hpp"
#include "synchrony/optimizer.hpp"
#include "synchrony/parallel.hpp"
#include "synchrony/random.hpp"
#include "synchrony/signal.hpp"
