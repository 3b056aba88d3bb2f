// Copyright 2026 The caddelag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "caddelag/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "caddelag/error.hpp"
#include "caddelag/philox.hpp"

namespace caddelag {

namespace {

double euclid(const Eigen::MatrixXd& p, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double d = p(static_cast<Eigen::Index>(i), c) - p(static_cast<Eigen::Index>(j), c);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::size_t SyntheticSpec::effective_block_size() const {
  if (block_size) return block_size;
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

void SyntheticSpec::validate() const {
  if (means.empty()) throw Error(ErrorCode::kInvalidArgument, "mixture needs at least one component");
  if (n < components())
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("n={} is smaller than the component count {}", n, components()));
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("flip probability {} outside [0, 1]", flip_prob));
  if (!(noise >= 0.0) || !std::isfinite(noise))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("noise scale {} must be >= 0", noise));
  if (!(stddev > 0.0) || !std::isfinite(stddev))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("mixture stddev {} must be > 0", stddev));
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"n", n},          {"means", means},         {"stddev", stddev},
          {"noise", noise},  {"flip_prob", flip_prob}, {"seed", seed},
          {"block_size", effective_block_size()}};
}

nlohmann::json GroundTruth::to_json() const {
  return {{"clusters", clusters},
          {"anomalous_nodes", anomalous_nodes},
          {"anomalous_edges", anomalous_edges},
          {"planted_mass", planted_mass},
          {"no_planted_anomalies", no_planted_anomalies()},
          {"identical_graphs", identical_graphs}};
}

void GroundTruth::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << to_json().dump() << '\n';
  if (!os) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
}

void sample_points(const SyntheticSpec& spec, Eigen::MatrixXd& points,
                   std::vector<std::size_t>& labels, Eigen::MatrixXd& perturbed) {
  spec.validate();
  const KeyedRng lab(spec.seed, Stream::kMixtureLabel);
  const KeyedRng pt(spec.seed, Stream::kMixturePoint);
  const KeyedRng pert(spec.seed, Stream::kPerturbation);
  const std::size_t k = spec.components();
  points.resize(static_cast<Eigen::Index>(spec.n), 2);
  perturbed.resize(static_cast<Eigen::Index>(spec.n), 2);
  labels.assign(spec.n, 0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto ii = static_cast<std::uint32_t>(i);
    const auto c = std::min(k - 1, static_cast<std::size_t>(lab.uniform(ii, 0, 0) * static_cast<double>(k)));
    labels[i] = c;
    const auto z = pt.normal_pair(ii, 0, 0);
    const auto e = pert.normal_pair(ii, 0, 0);
    const auto r = static_cast<Eigen::Index>(i);
    for (int d = 0; d < 2; ++d) {
      points(r, d) = spec.means[c][static_cast<std::size_t>(d)] + spec.stddev * z[static_cast<std::size_t>(d)];
      perturbed(r, d) = points(r, d) + spec.noise * e[static_cast<std::size_t>(d)];
    }
  }
}

double planted_value(const SyntheticSpec& spec, std::size_t i, std::size_t j) {
  if (i == j || spec.flip_prob == 0.0) return 0.0;
  const KeyedRng rng(spec.seed, Stream::kFlip);
  const auto w = rng.words(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0);
  if (!(unit_interval(w[0], w[1]) < spec.flip_prob)) return 0.0;
  return unit_interval(w[2], w[3]);
}

SyntheticPair generate_pair(Runtime& rt, const SyntheticSpec& spec, const std::string& name1,
                            const std::string& name2) {
  SyntheticPair out;
  sample_points(spec, out.points1, out.truth.clusters, out.points2);
  const std::size_t n = spec.n, p = spec.effective_block_size();

  GroundTruth& t = out.truth;
  t.planted_mass.assign(n, 0.0);
  bool any_r = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = (planted_value(spec, i, j) + planted_value(spec, j, i)) / 2.0;
      if (r == 0.0) continue;
      any_r = true;
      if (t.clusters[i] == t.clusters[j]) continue;
      t.anomalous_edges.push_back({i, j});
      t.planted_mass[i] += r;
      t.planted_mass[j] += r;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (t.planted_mass[i] > 0.0) t.anomalous_nodes.push_back(i);
  t.identical_graphs = !any_r && out.points1 == out.points2;

  const auto& p1 = out.points1;
  const auto& p2 = out.points2;
  out.a1 = from_function(rt, square_meta(name1, n, p, true), [&](std::size_t i, std::size_t j) {
    return i == j ? 0.0 : std::exp(-euclid(p1, i, j));
  });
  out.a2 = from_function(rt, square_meta(name2, n, p, true), [&](std::size_t i, std::size_t j) {
    if (i == j) return 0.0;
    return std::exp(-euclid(p2, i, j)) + (planted_value(spec, i, j) + planted_value(spec, j, i)) / 2.0;
  });
  return out;
}

MatrixHandle kernel_graph(Runtime& rt, const std::string& name, const Eigen::MatrixXd& points,
                          double sigma, std::size_t block_size) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("kernel bandwidth {} must be > 0", sigma));
  if (!points.allFinite()) throw Error(ErrorCode::kInvalidArgument, "kernel_graph: non-finite feature");
  const double denom = 2.0 * sigma * sigma;
  return from_function(rt, square_meta(name, static_cast<std::size_t>(points.rows()), block_size, true),
                       [&](std::size_t i, std::size_t j) {
                         if (i == j) return 0.0;
                         const double d = euclid(points, i, j);
                         return std::exp(-(d * d) / denom);
                       });
}

}  // namespace caddelag
