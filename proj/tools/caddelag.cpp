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

// Command-line front end: gen, ingest, embed, detect, verify, bench.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iterator>
#include <optional>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "caddelag/anomaly.hpp"
#include "caddelag/blockops.hpp"
#include "caddelag/config.hpp"
#include "caddelag/embedding.hpp"
#include "caddelag/error.hpp"
#include "caddelag/oracle.hpp"
#include "caddelag/synthgen.hpp"

namespace fs = std::filesystem;
using namespace caddelag;

namespace {

MatrixHandle open_path(const fs::path& p) {
  const fs::path clean = p.has_filename() ? p : p.parent_path();
  return open_matrix(clean.parent_path().empty() ? fs::path(".") : clean.parent_path(),
                     clean.filename().string());
}

Embedding load_embedding_path(const fs::path& p) {
  const fs::path clean = p.has_filename() ? p : p.parent_path();
  return load_embedding(clean.parent_path().empty() ? fs::path(".") : clean.parent_path(),
                        clean.filename().string());
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty() || v == 0)
      throw Error(ErrorCode::kInvalidArgument, fmt::format("bad list entry '{}' in '{}'", item, s));
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty list");
  return out;
}

void add_common(CLI::App* cmd, RunConfig& cfg, bool workers = true) {
  cmd->add_option("--scratch", cfg.scratch, "Scratch root (default $CADDELAG_SCRATCH)");
  if (workers) cmd->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--block-size", cfg.block_size, "Block side p (default ceil(sqrt(n)))");
}

void add_solver(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--eps", cfg.eps_rp, "Random-projection accuracy eps_RP");
  cmd->add_option("--delta", cfg.delta, "Solver accuracy delta");
  cmd->add_option("-d,--chain-length", cfg.d, "Inverse chain length d");
  cmd->add_option("--seed", cfg.seed, "Random seed");
}

struct Metrics {
  std::ofstream file;
  void attach(Runtime& rt, const std::string& path) {
    if (path.empty()) return;
    file.open(path, std::ios::app);
    if (!file) throw Error(ErrorCode::kIo, fmt::format("cannot open metrics file {}", path));
    rt.set_metrics_stream(&file);
  }
};

std::optional<ChainSplit> parse_split(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return chain_split_from_string(s);
}

// ---- gen --------------------------------------------------------------------

struct GenArgs {
  RunConfig cfg;
  std::size_t nodes = 0;
  double flip = 0.05;
  double noise = 0.3;
  fs::path out;
  std::string prefix = "g";
};

int run_gen(GenArgs& a) {
  SyntheticSpec spec;
  spec.n = a.nodes;
  spec.seed = a.cfg.seed;
  spec.flip_prob = a.flip;
  spec.noise = a.noise;
  spec.block_size = a.cfg.effective_block_size(a.nodes);
  spec.validate();
  const fs::path out = a.out.empty() ? resolve_scratch(a.cfg.scratch) : a.out;
  Runtime rt(out, a.cfg.workers);
  const auto pair = generate_pair(rt, spec, a.prefix + "1", a.prefix + "2");
  const fs::path truth = out / "truth.json";
  pair.truth.write(truth);
  std::cout << pair.a1.root.string() << '\n' << pair.a2.root.string() << '\n' << truth.string() << '\n';
  return 0;
}

// ---- ingest -----------------------------------------------------------------

struct IngestArgs {
  RunConfig cfg;
  fs::path csv;
  std::size_t nodes = 0;
  std::string name;
  fs::path out;
};

int run_ingest(IngestArgs& a) {
  std::ifstream is(a.csv);
  if (!is) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", a.csv.string()));
  const std::size_t n = a.nodes;
  std::unordered_map<std::uint64_t, double> w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_of("0123456789") != 0) continue;  // header
    std::stringstream ss(line);
    std::string fi, fj, fw;
    if (!std::getline(ss, fi, ',') || !std::getline(ss, fj, ',') || !std::getline(ss, fw))
      throw Error(ErrorCode::kParse, fmt::format("line {}: expected i,j,weight", lineno));
    auto to_index = [&](const std::string& s) {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != s.size() || s[0] == '-')
        throw Error(ErrorCode::kParse, fmt::format("line {}: bad node id '{}'", lineno, s));
      if (v >= n)
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("line {}: node id {} out of range for n={}", lineno, v, n));
      return static_cast<std::uint64_t>(v);
    };
    const auto i = to_index(fi), j = to_index(fj);
    std::size_t pos = 0;
    double wt = 0.0;
    try {
      wt = std::stod(fw, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != fw.size() || !std::isfinite(wt))
      throw Error(ErrorCode::kParse, fmt::format("line {}: non-numeric weight '{}'", lineno, fw));
    if (i == j) throw Error(ErrorCode::kInvalidArgument, fmt::format("line {}: self-loop at node {}", lineno, i));
    if (!(wt > 0.0))
      throw Error(ErrorCode::kInvalidArgument, fmt::format("line {}: weight must be > 0", lineno));
    w[i * n + j] += wt;
    if (i != j) w[j * n + i] += wt;
  }
  const fs::path out = a.out.empty() ? resolve_scratch(a.cfg.scratch) : a.out;
  Runtime rt(out, a.cfg.workers);
  const auto h = from_function(rt, square_meta(a.name, n, a.cfg.effective_block_size(n), true),
                               [&](std::size_t i, std::size_t j) {
                                 auto it = w.find(static_cast<std::uint64_t>(i) * n + j);
                                 return it == w.end() ? 0.0 : it->second;
                               });
  std::cout << h.root.string() << '\n';
  return 0;
}

// ---- embed ------------------------------------------------------------------

struct EmbedArgs {
  RunConfig cfg;
  fs::path graph;
  fs::path out;
  std::string name;
  std::size_t k = 0;
  std::string split = "auto";
  std::string metrics;
  bool keep_chain = false;
};

int run_embed(EmbedArgs& a) {
  a.cfg.validate();
  const MatrixHandle g = open_path(a.graph);
  Runtime rt(resolve_scratch(a.cfg.scratch), a.cfg.workers);
  Metrics m;
  m.attach(rt, a.metrics);
  EmbeddingParams p;
  p.eps_rp = a.cfg.eps_rp;
  p.delta = a.cfg.delta;
  p.d = a.cfg.d;
  p.seed = a.cfg.seed;
  p.k = a.k;
  p.split = parse_split(a.split);
  p.keep_chain = a.keep_chain;
  const Embedding e = commute_time_embedding(rt, g, p);
  const fs::path out = a.out.empty() ? g.root.parent_path() : a.out;
  const std::string name = a.name.empty() ? g.name() + "_z" : a.name;
  const std::size_t bs = a.cfg.block_size ? a.cfg.block_size : g.block_size();
  const auto h = save_embedding(rt, e, out, name, bs);
  if (!e.structure.connected())
    std::cerr << fmt::format("caddelag: warning: '{}' has {} components; cross-component distances are not meaningful\n",
                             g.name(), e.structure.components);
  std::cout << h.root.string() << '\n';
  return 0;
}

// ---- detect -----------------------------------------------------------------

struct DetectArgs {
  RunConfig cfg;
  fs::path g1, g2, z1, z2, out = "report.json";
  std::size_t top_edges = 100;
  double tolerance = 0.0;
  bool dense_path = false;
  std::string metrics;
};

int run_detect(DetectArgs& a) {
  a.cfg.validate();
  const MatrixHandle g1 = open_path(a.g1), g2 = open_path(a.g2);
  const Embedding z1 = load_embedding_path(a.z1), z2 = load_embedding_path(a.z2);
  Runtime rt(resolve_scratch(a.cfg.scratch), a.cfg.workers);
  Metrics m;
  m.attach(rt, a.metrics);
  const GraphPair gp = make_graph_pair(rt, g1, g2);
  DetectOptions opts;
  opts.top_nodes = a.cfg.top_k;
  opts.top_edges = a.top_edges;
  opts.delta.tolerance = a.tolerance;
  opts.delta.dense_path = a.dense_path;
  const AnomalyReport rep = detect(rt, gp, z1, z2, opts);
  rep.write(a.out);
  std::cout << a.out.string() << '\n';
  return 0;
}

// ---- verify -----------------------------------------------------------------

struct VerifyArgs {
  RunConfig cfg;
  fs::path g1, g2;
  std::size_t cap = oracle::kDefaultDenseCap;
  double eps_ref = 1e-3;
};

int run_verify(VerifyArgs& a) {
  a.cfg.validate();
  const MatrixHandle g1 = open_path(a.g1);
  oracle::require_cap(g1.n_rows(), a.cap);
  Runtime rt(resolve_scratch(a.cfg.scratch), a.cfg.workers);
  const auto n = static_cast<double>(g1.n_rows());

  EmbeddingParams p;
  p.eps_rp = a.cfg.eps_rp;
  p.delta = a.cfg.delta;
  p.d = a.cfg.d;
  p.seed = a.cfg.seed;
  const Embedding e = commute_time_embedding(rt, g1, p);
  const oracle::DenseMatrix dense = oracle::load_dense(g1, a.cap);
  const oracle::DenseMatrix truth = oracle::exact_commute_times(dense, a.cap);
  oracle::DenseMatrix approx = oracle::DenseMatrix::Zero(truth.rows(), truth.cols());
  for (Eigen::Index i = 0; i < approx.rows(); ++i)
    for (Eigen::Index j = 0; j < approx.cols(); ++j)
      if (i != j)
        approx(i, j) = e.volume * squared_distance(e.z, static_cast<std::size_t>(i), static_cast<std::size_t>(j));

  oracle::EmbeddedSettings base;
  base.k = k_rp(n, a.eps_ref);
  base.seed = a.cfg.seed;
  base.solver = oracle::EmbeddedSolver::kPseudoinverse;
  const oracle::DenseMatrix baseline = oracle::embedded_commute_times(dense, base);

  nlohmann::json out{{"graph", g1.name()},
                     {"n", g1.n_rows()},
                     {"k_rp", e.k_rp()},
                     {"parameters", a.cfg.to_json()},
                     {"baseline_eps", a.eps_ref},
                     {"relative_error", oracle::relative_error(approx, baseline, truth)},
                     {"relative_deviation", oracle::relative_deviation(approx, truth)},
                     {"baseline_relative_deviation", oracle::relative_deviation(baseline, truth)}};

  if (!a.g2.empty()) {
    const MatrixHandle g2 = open_path(a.g2);
    EmbeddingParams p2 = p;
    const Embedding e2 = commute_time_embedding(rt, g2, p2);
    const GraphPair gp = make_graph_pair(rt, g1, g2);
    DetectOptions dopt;
    dopt.top_nodes = a.cfg.top_k;
    const AnomalyReport rep = detect(rt, gp, e, e2, dopt);
    oracle::CadOptions co;
    co.top_nodes = a.cfg.top_k;
    const AnomalyReport exact = oracle::oracle_cad(dense, oracle::load_dense(g2, a.cap), co, a.cap);
    auto overlap = [&](const AnomalyReport& x) {
      std::vector<std::size_t> s1, s2;
      for (const auto& r : rep.nodes) s1.push_back(r.id);
      for (const auto& r : x.nodes) s2.push_back(r.id);
      std::sort(s1.begin(), s1.end());
      std::sort(s2.begin(), s2.end());
      std::vector<std::size_t> both;
      std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(), std::back_inserter(both));
      return static_cast<double>(both.size()) / static_cast<double>(rep.nodes.size());
    };
    out["top_k_overlap_exact"] = overlap(exact);
  }
  std::cout << out.dump() << '\n';
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  RunConfig cfg;
  std::size_t nodes = 2000;
  std::string workers = "1,2,4,8";
  std::size_t repeat = 1;
};

int run_bench(BenchArgs& a) {
  const auto workers = parse_list(a.workers);
  if (a.repeat < 1) throw Error(ErrorCode::kInvalidArgument, "repeat must be >= 1");
  Runtime rt(resolve_scratch(a.cfg.scratch), 1);
  rt.set_metrics_stream(&std::cout);
  SyntheticSpec spec;
  spec.n = a.nodes;
  spec.seed = a.cfg.seed;
  spec.block_size = a.cfg.effective_block_size(a.nodes);
  const std::string tag = rt.temp_name("bench");
  const auto pair = generate_pair(rt, spec, tag + "_g1", tag + "_g2");
  remove_matrix(pair.a2);
  for (std::size_t s : workers) {
    rt.set_workers(s);
    for (std::size_t r = 0; r < a.repeat; ++r) {
      const MatrixHandle c = multiply(rt, pair.a1, pair.a1);
      remove_matrix(c);
    }
  }
  remove_matrix(pair.a1);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-core commute-time anomaly detection between graph snapshots"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic snapshot pair with planted anomalies");
  add_common(c_gen, gen.cfg);
  c_gen->add_option("--nodes", gen.nodes, "Node count")->required()->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.cfg.seed, "Random seed");
  c_gen->add_option("--flip-prob", gen.flip, "Probability of a planted R entry");
  c_gen->add_option("--noise", gen.noise, "Perturbation stddev for the second snapshot");
  c_gen->add_option("--out", gen.out, "Output directory (default: scratch root)");
  c_gen->add_option("--prefix", gen.prefix, "Matrix name prefix");

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "Build an adjacency matrix from an i,j,weight CSV");
  add_common(c_ing, ing.cfg);
  c_ing->add_option("--csv", ing.csv, "Edge list")->required();
  c_ing->add_option("--nodes", ing.nodes, "Node count")->required()->check(CLI::PositiveNumber);
  c_ing->add_option("--name", ing.name, "Matrix name")->required();
  c_ing->add_option("--out", ing.out, "Output directory (default: scratch root)");

  EmbedArgs emb;
  auto* c_emb = app.add_subcommand("embed", "Compute a commute-time embedding");
  add_common(c_emb, emb.cfg);
  add_solver(c_emb, emb.cfg);
  c_emb->add_option("--graph", emb.graph, "Adjacency matrix directory")->required();
  c_emb->add_option("--out", emb.out, "Output directory (default: beside the graph)");
  c_emb->add_option("--name", emb.name, "Embedding name (default <graph>_z)");
  c_emb->add_option("--k", emb.k, "Force the projection count");
  c_emb->add_option("--split", emb.split, "Chain split: auto, standard or lazy")
      ->check(CLI::IsMember({"auto", "standard", "lazy"}));
  c_emb->add_option("--metrics", emb.metrics, "Append stage metrics (JSON lines) to this file");
  c_emb->add_flag("--keep-chain", emb.keep_chain, "Keep the chain matrices in scratch");

  DetectArgs det;
  auto* c_det = app.add_subcommand("detect", "Score changes between two snapshots");
  add_common(c_det, det.cfg);
  c_det->add_option("--g1", det.g1, "First snapshot")->required();
  c_det->add_option("--g2", det.g2, "Second snapshot")->required();
  c_det->add_option("--z1", det.z1, "Embedding of the first snapshot")->required();
  c_det->add_option("--z2", det.z2, "Embedding of the second snapshot")->required();
  c_det->add_option("--top", det.cfg.top_k, "Number of ranked nodes");
  c_det->add_option("--top-edges", det.top_edges, "Number of ranked edges");
  c_det->add_option("--tolerance", det.tolerance, "Treat |dA| <= tolerance as unchanged");
  c_det->add_flag("--dense-path", det.dense_path, "Compute distances for unchanged pairs too");
  c_det->add_option("--out", det.out, "Report path");
  c_det->add_option("--metrics", det.metrics, "Append stage metrics (JSON lines) to this file");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Compare against the dense oracle (small n)");
  add_common(c_ver, ver.cfg);
  add_solver(c_ver, ver.cfg);
  c_ver->add_option("--g1,--graph", ver.g1, "Graph to check")->required();
  c_ver->add_option("--g2", ver.g2, "Optional second snapshot for a ranking comparison");
  c_ver->add_option("--top", ver.cfg.top_k, "Ranking size for the comparison");
  c_ver->add_option("--cap", ver.cap, "Largest n accepted by the oracle");
  c_ver->add_option("--baseline-eps", ver.eps_ref, "eps_RP of the exact-solve baseline");

  BenchArgs ben;
  auto* c_ben = app.add_subcommand("bench", "Time block multiplication across worker counts");
  add_common(c_ben, ben.cfg, false);
  c_ben->add_option("--nodes", ben.nodes, "Node count")->check(CLI::PositiveNumber);
  c_ben->add_option("--workers", ben.workers, "Comma-separated worker counts");
  c_ben->add_option("--repeat", ben.repeat, "Repetitions per worker count");
  c_ben->add_option("--seed", ben.cfg.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "caddelag: usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*c_gen) return run_gen(gen);
    if (*c_ing) return run_ingest(ing);
    if (*c_emb) return run_embed(emb);
    if (*c_det) return run_detect(det);
    if (*c_ver) return run_verify(ver);
    if (*c_ben) return run_bench(ben);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "caddelag: error: " << msg << '\n';
    return 1;
  }
  return 1;
}
