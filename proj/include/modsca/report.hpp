/*
 * SPDX-FileCopyrightText: Copyright 2026 The modsca Authors
 * SPDX-License-Identifier: Apache-2.0
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

#pragma once

#include "modsca/guessing_entropy.hpp"
#include "modsca/introspect.hpp"
#include "modsca/trainer.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace modsca {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// `traces,mean_rank`, one row per prefix length.
std::string ge_csv(const GEVector &ge);
/// epoch,total,ce,mse,final_rank,converged_at
std::string training_csv(const TrainingReport &report);
/// kernel,position,value
std::string heatmap_csv(const Heatmap &heatmap);
/// position,saliency
std::string saliency_csv(std::span<const double> values);
/// Square matrix with a header row and column of names.
std::string distance_matrix_csv(const std::vector<std::string> &names,
                                const std::vector<double> &matrix);

/// Line plot of the first two columns of a headered CSV (polyline + axes).
std::string svg_from_csv(const std::string &csv, const std::string &title);

void write_text(const std::filesystem::path &path, const std::string &text);
std::string read_text(const std::filesystem::path &path);

} // namespace modsca
