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

#include "modsca/report.hpp"

#include "modsca/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace modsca {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string ge_csv(const GEVector &ge) {
    std::string out = "traces,mean_rank\n";
    for (std::size_t i = 0; i < ge.size(); ++i)
        out += std::to_string(i + 1) + "," + format_number(ge.ranks[i]) + "\n";
    return out;
}

std::string training_csv(const TrainingReport &report) {
    std::string out = "epoch,total,ce,mse,final_rank,converged_at\n";
    for (const EpochRecord &r : report.epochs) {
        out += std::to_string(r.epoch) + "," + format_number(r.total) + "," +
               format_number(r.ce) + "," + format_number(r.mse) + ",";
        if (r.ge)
            out += format_number(r.ge->final_rank());
        out += ",";
        if (r.converged)
            out += std::to_string(*r.converged);
        out += "\n";
    }
    return out;
}

std::string heatmap_csv(const Heatmap &h) {
    std::string out = "kernel,position,value\n";
    for (std::size_t k = 0; k < h.kernels; ++k)
        for (std::size_t p = 0; p < h.positions; ++p)
            out += std::to_string(k) + "," + std::to_string(p) + "," +
                   format_number(h.at(k, p)) + "\n";
    return out;
}

std::string saliency_csv(std::span<const double> values) {
    std::string out = "position,saliency\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out += std::to_string(i) + "," + format_number(values[i]) + "\n";
    return out;
}

std::string distance_matrix_csv(const std::vector<std::string> &names,
                                const std::vector<double> &matrix) {
    const std::size_t n = names.size();
    if (matrix.size() != n * n)
        throw DimensionError("distance matrix does not match the name list");
    std::string out = "module";
    for (const auto &name : names)
        out += "," + name;
    out += "\n";
    for (std::size_t i = 0; i < n; ++i) {
        out += names[i];
        for (std::size_t j = 0; j < n; ++j)
            out += "," + format_number(matrix[i * n + j]);
        out += "\n";
    }
    return out;
}

namespace {

std::string xml_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

double parse_number(const std::string &cell) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw DataError("non-numeric CSV cell '" + cell + "'");
    return v;
}

} // namespace

std::string svg_from_csv(const std::string &csv, const std::string &title) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw DataError("CSV has no header");
    std::string xname = line.substr(0, line.find(','));
    std::string yname = line.find(',') == std::string::npos ? "" : line.substr(line.find(',') + 1);
    yname = yname.substr(0, yname.find(','));

    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto c1 = line.find(',');
        if (c1 == std::string::npos)
            throw DataError("CSV row has fewer than two columns");
        const auto c2 = line.find(',', c1 + 1);
        xs.push_back(parse_number(line.substr(0, c1)));
        ys.push_back(parse_number(line.substr(c1 + 1, c2 == std::string::npos ? c2 : c2 - c1 - 1)));
    }

    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!xs.empty()) {
        x0 = *std::min_element(xs.begin(), xs.end());
        x1 = *std::max_element(xs.begin(), xs.end());
        y0 = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
        y1 = *std::max_element(ys.begin(), ys.end());
    }
    if (x1 <= x0)
        x1 = x0 + 1;
    if (y1 <= y0)
        y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
        << H - B << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
        svg << "<text x=\"" << px(fx) << "\" y=\"" << H - B + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << format_number(fx) << "</text>\n";
        svg << "<text x=\"" << L - 6 << "\" y=\"" << py(fy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << format_number(fy) << "</text>\n";
    }
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(xname) << "</text>\n";
    svg << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 14 " << H / 2 << ")\">" << xml_escape(yname) << "</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
        svg << (i ? " " : "") << format_number(px(xs[i])) << "," << format_number(py(ys[i]));
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << text;
    if (!out)
        throw DataError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace modsca
