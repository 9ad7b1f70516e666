/*
 * Copyright 2026 The gppl authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GPPL_GPPL_HPP
#define GPPL_GPPL_HPP

#include "gppl/bws.hpp"
#include "gppl/calibrate.hpp"
#include "gppl/corpus.hpp"
#include "gppl/csv.hpp"
#include "gppl/errors.hpp"
#include "gppl/features.hpp"
#include "gppl/kernel.hpp"
#include "gppl/likelihood.hpp"
#include "gppl/metrics.hpp"
#include "gppl/model.hpp"
#include "gppl/pairgen.hpp"
#include "gppl/random.hpp"
#include "gppl/serialize.hpp"
#include "gppl/textfeat.hpp"
#include "gppl/utf8.hpp"

#endif  // GPPL_GPPL_HPP
