/*
 * Copyright 2026 The cyclosync Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "cyclosync/ecg.hpp"
#include "cyclosync/embedding.hpp"
#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/matrix.hpp"
#include "cyclosync/mlp.hpp"
#include "cyclosync/pathfinding.hpp"
#include "cyclosync/phase.hpp"
#include "cyclosync/pipeline.hpp"
#include "cyclosync/scoring.hpp"
#include "cyclosync/sync_matrix.hpp"
#include "cyclosync/synth.hpp"
#include "cyclosync/training.hpp"
