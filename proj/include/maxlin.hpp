/*
 * Copyright 2026 The maxlin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MAXLIN_MAXLIN_HPP
#define MAXLIN_MAXLIN_HPP

#include "maxlin/activation_relax.hpp"
#include "maxlin/bounds.hpp"
#include "maxlin/certify.hpp"
#include "maxlin/engine.hpp"
#include "maxlin/error.hpp"
#include "maxlin/maxpool_relax.hpp"
#include "maxlin/model.hpp"
#include "maxlin/model_io.hpp"
#include "maxlin/oracle.hpp"
#include "maxlin/random_network.hpp"
#include "maxlin/soundness.hpp"
#include "maxlin/volume_bench.hpp"

#endif  // MAXLIN_MAXLIN_HPP
