/*
 * Copyright 2026 The durel-kit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Everything except the HTTP layer (durel/http_api.hpp), which pulls in
// cpp-httplib.

#pragma once

#include "durel/agreement.hpp"
#include "durel/config.hpp"
#include "durel/corpus.hpp"
#include "durel/csv.hpp"
#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/measures.hpp"
#include "durel/orthography.hpp"
#include "durel/plot.hpp"
#include "durel/ranks.hpp"
#include "durel/report.hpp"
#include "durel/rng.hpp"
#include "durel/sampling.hpp"
#include "durel/study.hpp"
#include "durel/task.hpp"
#include "durel/timestamp.hpp"
