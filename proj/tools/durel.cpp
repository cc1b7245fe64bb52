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

// durel: command-line front end.
//
//   durel import-check --config study.cfg
//   durel sample  --config study.cfg [--seed N] [--out-dir DIR]
//   durel serve   --data-dir DIR [--port P] [--study-id ID --task T --key K --roster a,b,c]
//   durel ingest  --key key.csv [--out-dir DIR] ANNOTATOR=filled.csv ...
//   durel analyze --key key.csv [--threshold X] [--policy P] [--out-dir DIR] judgments.csv ...
//   durel plot    [--out-dir DIR]
//
// Exit codes: 0 success, 1 I/O failure, 2 invalid input or insufficient data.

#include <pthread.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "durel/durel.hpp"
#include "durel/http_api.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::string policy;
  std::string out_dir = ".";
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw durel::IoError("cannot read " + p.string());
  return in;
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw durel::IoError("cannot write " + p.string());
  out << content;
  if (!out.flush()) throw durel::IoError("write failed for " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw durel::IoError("cannot create " + dir.string() + ": " + ec.message());
}

durel::StudyConfig config_from(const GlobalOptions& g) {
  if (g.config.empty()) throw durel::ValidationError("--config is required");
  durel::StudyConfig c = durel::load_config(g.config);
  if (g.seed) c.sampling.seed = *g.seed;
  if (g.threshold) c.threshold = *g.threshold;
  if (!g.policy.empty()) {
    const auto p = durel::parse_policy(g.policy);
    if (!p) throw durel::ValidationError("--policy must be reject or latest-wins");
    c.policy = *p;
  }
  return c;
}

durel::Corpus load_corpus(const durel::StudyConfig& c) {
  if (c.corpus.empty()) throw durel::ValidationError("config names no corpus");
  auto in = open_in(c.corpus);
  return durel::import_vertical(in, c.import_options());
}

durel::TaskKey load_key(const fs::path& p) {
  auto in = open_in(p);
  return durel::read_key(in);
}

std::string file_label(const durel::TargetSpec& t) {
  std::string s = t.lemma + (t.pos ? "_" + *t.pos : std::string{});
  for (char& ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (!(u >= 0x80 || std::isalnum(u) || ch == '-' || ch == '_')) ch = '_';
  }
  return s;
}

// ---------------------------------------------------------------------------

int cmd_import_check(const GlobalOptions& g, const std::string& corpus_override) {
  durel::StudyConfig c;
  if (!g.config.empty()) c = config_from(g);
  if (!corpus_override.empty()) c.corpus = corpus_override;
  const durel::Corpus corpus = load_corpus(c);
  std::cout << "documents: " << corpus.documents.size() << "\n"
            << "sentences: " << corpus.sentence_count() << "\n"
            << "tokens:    " << corpus.token_count() << "\n";
  const durel::ExtractOptions xo{c.lemma_case_insensitive};
  for (const auto& t : c.targets) {
    std::cout << t.display() << ": " << c.period1.label << "=" << durel::usage_frequency(corpus, t, c.period1, xo)
              << " " << c.period2.label << "=" << durel::usage_frequency(corpus, t, c.period2, xo) << "\n";
  }
  return kExitOk;
}

int cmd_sample(const GlobalOptions& g) {
  const durel::StudyConfig c = config_from(g);
  c.validate();
  const durel::Corpus corpus = load_corpus(c);
  const durel::ExtractOptions xo{c.lemma_case_insensitive};

  durel::Rng rng(c.sampling.seed);
  std::vector<durel::UsePair> pairs;
  std::map<std::string, std::size_t> next_index;  // per lemma, keeps ids unique if a lemma repeats
  for (const auto& t : c.targets) {
    const auto t1 = durel::extract_uses(corpus, t, c.period1, xo);
    const auto t2 = durel::extract_uses(corpus, t, c.period2, xo);
    std::cout << t.display() << ": " << c.period1.label << "=" << t1.size() << " " << c.period2.label << "="
              << t2.size() << "\n";
    auto& first = next_index.try_emplace(t.lemma, 1).first->second;
    auto tp = durel::build_study_pairs(t, t1, t2, c.sampling, rng, first);
    first += tp.size();
    pairs.insert(pairs.end(), std::make_move_iterator(tp.begin()), std::make_move_iterator(tp.end()));
  }
  const auto [task, key] = durel::build_task(pairs, rng);

  const fs::path dir = g.out_dir;
  ensure_dir(dir);
  std::ostringstream t, k;
  durel::write_task(t, task);
  durel::write_key(k, key);
  write_text(dir / "task.csv", t.str());
  write_text(dir / "key.csv", k.str());
  std::cout << "wrote " << task.rows.size() << " rows to " << (dir / "task.csv").string() << " and "
            << (dir / "key.csv").string() << "\n";
  return kExitOk;
}

struct ServeOptions {
  std::string data_dir = "studies";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token;
  std::string static_dir;
  std::string study_id;
  std::string task;
  std::string key;
  std::vector<std::string> roster;
};

int cmd_serve(const GlobalOptions& g, const ServeOptions& o) {
  durel::ApiOptions api;
  api.admin_token = o.admin_token;
  if (!g.policy.empty()) {
    const auto p = durel::parse_policy(g.policy);
    if (!p) throw durel::ValidationError("--policy must be reject or latest-wins");
    api.default_policy = *p;
  }

  // Block termination signals before any thread starts; a dedicated thread
  // waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  durel::StudyStore store(o.data_dir);
  if (!o.study_id.empty()) {
    if (o.task.empty() || o.key.empty() || o.roster.empty())
      throw durel::ValidationError("--study-id needs --task, --key and --roster");
    auto tin = open_in(o.task);
    auto task = durel::read_task(tin).task;
    auto key = load_key(o.key);
    std::vector<durel::RosterEntry> roster;
    for (const auto& r : o.roster) {
      const auto colon = r.find(':');
      roster.push_back(colon == std::string::npos ? durel::RosterEntry{r, {}}
                                                  : durel::RosterEntry{r.substr(0, colon), r.substr(colon + 1)});
    }
    const auto res = store.create_study(o.study_id, std::move(task), std::move(key), std::move(roster), api.default_policy);
    std::cout << (res.created ? "created" : "loaded") << " study " << res.study_id << " (" << res.rows << " rows, "
              << durel::to_string(res.policy) << ")\n";
    for (const auto& a : res.roster) std::cout << "  annotator " << a.id << " token " << a.token << "\n";
  }

  httplib::Server server;
  durel::install_routes(server, store, api);
  if (!o.static_dir.empty() && !server.set_mount_point("/", o.static_dir))
    throw durel::IoError("cannot serve static files from " + o.static_dir);

  int port = o.port;
  if (port == 0) {
    port = server.bind_to_any_port(o.host);
  } else if (!server.bind_to_port(o.host, port)) {
    port = -1;
  }
  if (port < 0) throw durel::IoError("cannot listen on " + o.host + ":" + std::to_string(o.port));
  std::cout << "listening on " << o.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

int cmd_ingest(const GlobalOptions& g, const std::string& key_path, const std::vector<std::string>& files,
               const std::string& output) {
  if (files.empty()) throw durel::ValidationError("no filled task files given");
  const auto key = load_key(key_path);
  std::vector<durel::Judgment> all;
  for (const auto& spec : files) {
    const auto eq = spec.find('=');
    const std::string annotator = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    const fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
    auto in = open_in(path);
    auto res = durel::ingest_filled_task(in, annotator, key);
    std::cout << annotator << ": " << res.judgments.size() << " judgments, " << res.missing.size() << " missing\n";
    for (const auto& m : res.missing) std::cout << "  missing " << m << "\n";
    all.insert(all.end(), res.judgments.begin(), res.judgments.end());
  }
  const fs::path out_path = output.empty() ? fs::path(g.out_dir) / "judgments.csv" : fs::path(output);
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  std::ostringstream out;
  durel::write_judgments(out, all);
  write_text(out_path, out.str());
  std::cout << "wrote " << all.size() << " judgments to " << out_path.string() << "\n";
  return kExitOk;
}

int cmd_analyze(const GlobalOptions& g, const std::string& key_path, const std::vector<std::string>& files) {
  double threshold = durel::kDefaultThreshold;
  durel::DuplicatePolicy policy = durel::DuplicatePolicy::kReject;
  if (!g.config.empty()) {
    const auto c = config_from(g);
    threshold = c.threshold;
    policy = c.policy;
  }
  if (g.threshold) threshold = *g.threshold;
  if (!g.policy.empty()) {
    const auto p = durel::parse_policy(g.policy);
    if (!p) throw durel::ValidationError("--policy must be reject or latest-wins");
    policy = *p;
  }
  if (!(threshold >= 0)) throw durel::ValidationError("--threshold must be non-negative");

  const auto key = load_key(key_path);
  std::vector<durel::Judgment> judgments;
  for (const auto& f : files) {
    auto in = open_in(f);
    auto js = durel::read_judgments(in);
    judgments.insert(judgments.end(), js.begin(), js.end());
  }
  if (judgments.empty()) throw durel::ValidationError("no judgments to analyze");

  const auto matrix = durel::assemble_matrix(judgments, key, policy);
  const auto analysis = durel::analyze_targets(matrix, key, threshold);
  const auto hist = durel::histograms(matrix, key);

  const fs::path dir = g.out_dir;
  ensure_dir(dir);
  std::ostringstream m, h;
  durel::write_measures(m, analysis);
  durel::write_histograms(h, hist);
  write_text(dir / "measures.csv", m.str());
  write_text(dir / "histograms.csv", h.str());

  std::cout << matrix.pair_count() << " pairs, " << matrix.annotator_count() << " annotators, "
            << matrix.filled_count() << " judgments\n";
  if (matrix.annotator_count() >= 2) {
    const auto agreement = durel::agreement_report(matrix);
    std::ostringstream a;
    durel::write_agreement(a, agreement);
    write_text(dir / "agreement.csv", a.str());
    try {
      std::cout << "mean pairwise rho: " << durel::format_fixed(durel::mean_pairwise(agreement), 4) << "\n";
    } catch (const durel::UndefinedCorrelationError&) {
      std::cout << "mean pairwise rho: undefined\n";
    }
  } else {
    std::cout << "agreement skipped: fewer than 2 annotators\n";
  }
  for (const auto& r : analysis) {
    std::cout << "  " << r.means.target.display() << " delta_later="
              << (r.measures.delta_later ? durel::format_fixed(*r.measures.delta_later, 3) : "undefined") << " "
              << (r.change_class ? durel::to_string(*r.change_class) : "") << "\n";
  }
  return kExitOk;
}

int cmd_plot(const GlobalOptions& g, std::string measures_path, std::string hist_path) {
  const fs::path dir = g.out_dir;
  if (measures_path.empty()) measures_path = (dir / "measures.csv").string();
  if (hist_path.empty()) hist_path = (dir / "histograms.csv").string();
  auto min = open_in(measures_path);
  auto hin = open_in(hist_path);
  const auto measures = durel::read_measures(min);
  const auto hist = durel::read_histograms(hin);

  const fs::path figs = dir / "figures";
  ensure_dir(figs);
  const std::string ranked = durel::plot::ranked_delta_later_csv(measures);
  write_text(figs / "delta_later_ranked.csv", ranked);
  write_text(figs / "delta_later_ranked.svg", durel::plot::ranked_delta_later_svg(ranked));

  std::vector<durel::TargetSpec> targets;
  for (const auto& r : hist)
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) targets.push_back(r.target);
  for (const auto& t : targets) {
    std::vector<durel::HistogramRow> rows;
    for (const auto& r : hist)
      if (r.target == t) rows.push_back(r);
    const std::string data = durel::plot::histogram_csv(rows);
    const std::string base = "hist_" + file_label(t);
    write_text(figs / (base + ".csv"), data);
    write_text(figs / (base + ".svg"), durel::plot::histogram_svg(t.display(), data));
  }
  std::cout << "wrote figures for " << targets.size() << " targets to " << figs.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"durel: diachronic usage relatedness annotation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  double threshold = 0;
  app.add_option("--config", g.config, "Study config file");
  auto* seed_opt = app.add_option("--seed", seed, "Sampling seed (overrides config)");
  auto* thr_opt = app.add_option("--threshold", threshold, "Classification threshold (overrides config)");
  app.add_option("--policy", g.policy, "Duplicate policy: reject or latest-wins");
  app.add_option("--out-dir", g.out_dir, "Output directory");

  std::string corpus_override;
  auto* import_check = app.add_subcommand("import-check", "Parse a corpus and report sizes and target frequencies");
  import_check->add_option("--corpus", corpus_override, "Corpus file (overrides config)");

  auto* sample = app.add_subcommand("sample", "Sample use pairs and write task.csv and key.csv");

  ServeOptions so;
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  serve->add_option("--data-dir", so.data_dir, "Directory holding persisted studies");
  serve->add_option("--host", so.host, "Listen address");
  serve->add_option("--port", so.port, "Listen port (0 picks a free one)");
  serve->add_option("--admin-token", so.admin_token, "Bearer token required for admin routes");
  serve->add_option("--static-dir", so.static_dir, "Serve files (e.g. the annotator UI) from this directory");
  serve->add_option("--study-id", so.study_id, "Create or load this study at startup");
  serve->add_option("--task", so.task, "Task CSV for --study-id");
  serve->add_option("--key", so.key, "Key CSV for --study-id");
  serve->add_option("--roster", so.roster, "Annotator ids, optionally id:token")->delimiter(',');

  std::string key_path, output;
  std::vector<std::string> files;
  auto* ingest = app.add_subcommand("ingest", "Convert filled task files into a judgment CSV");
  ingest->add_option("--key", key_path, "Key CSV")->required();
  ingest->add_option("--output", output, "Judgment CSV to write (default <out-dir>/judgments.csv)");
  ingest->add_option("files", files, "ANNOTATOR=filled_task.csv (annotator defaults to the file stem)");

  auto* analyze = app.add_subcommand("analyze", "Compute change measures, agreement and histograms");
  analyze->add_option("--key", key_path, "Key CSV")->required();
  analyze->add_option("files", files, "Judgment CSV files");

  std::string measures_path, hist_path;
  auto* plot = app.add_subcommand("plot", "Render figures from analysis outputs");
  plot->add_option("--measures", measures_path, "measures.csv (default <out-dir>/measures.csv)");
  plot->add_option("--histograms", hist_path, "histograms.csv (default <out-dir>/histograms.csv)");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*thr_opt) g.threshold = threshold;

  try {
    if (*import_check) return cmd_import_check(g, corpus_override);
    if (*sample) return cmd_sample(g);
    if (*serve) return cmd_serve(g, so);
    if (*ingest) return cmd_ingest(g, key_path, files, output);
    if (*analyze) return cmd_analyze(g, key_path, files);
    if (*plot) return cmd_plot(g, measures_path, hist_path);
  } catch (const durel::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const durel::InsufficientUsesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const durel::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const durel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
