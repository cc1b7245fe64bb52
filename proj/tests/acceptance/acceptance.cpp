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

// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero
// when any criterion fails; a skipped criterion does not fail the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>

#include "child_process.hpp"
#include "durel/durel.hpp"
#include "durel/http_api.hpp"
#include "local_server.hpp"
#include "oracles.hpp"
#include "reference.hpp"
#include "run.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace durel;
using namespace durel::testing;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

// Tolerances and budgets.
constexpr double kRankTolerance = 1e-12;
constexpr double kTableTolerance = 0.01;
constexpr double kMeansTolerance = 0.02;
constexpr double kSignificance = 0.01;
constexpr double kSpearmanBudget = 5.0;
constexpr double kTableBudget = 10.0;
constexpr double kEndToEndBudget = 30.0;
constexpr int kEndToEndRequired = 95;

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

Verdict pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Verdict fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Verdict skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }
Verdict check(bool ok, std::string d) { return {ok ? Outcome::kPass : Outcome::kFail, std::move(d)}; }

std::string num(double v, int digits = 4) { return format_fixed(v, digits); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const fs::path kFixtureDir = DUREL_FIXTURE_DIR;
const std::string kCli = DUREL_CLI_PATH;

// ---------------------------------------------------------------------------

Verdict spearman_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0;
  int done = 0, constant_redraws = 0;
  while (done < 1000) {
    const std::size_t n = 3 + rng.below(10);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0 + static_cast<double>(rng.below(4));
      y[i] = 1.0 + static_cast<double>(rng.below(4));
    }
    const auto same = [](const std::vector<double>& v) { return std::count(v.begin(), v.end(), v[0]) == std::ssize(v); };
    if (same(x) || same(y)) {
      ++constant_redraws;
      continue;
    }
    std::vector<JudgmentValue> jx, jy;
    for (std::size_t i = 0; i < n; ++i) {
      jx.push_back(JudgmentValue::of(static_cast<int>(x[i])));
      jy.push_back(JudgmentValue::of(static_cast<int>(y[i])));
    }
    const double got = spearman(std::span<const JudgmentValue>(jx), std::span<const JudgmentValue>(jy)).rho;
    worst = std::max(worst, std::abs(got - oracle_spearman(x, y)));
    ++done;
  }
  const double secs = seconds_since(t0);
  return check(worst <= kRankTolerance && secs < kSpearmanBudget,
               "max |diff| " + sci(worst) + ", " + num(secs, 3) + " s, " +
                   std::to_string(constant_redraws) + " constant vectors redrawn");
}

Verdict classical_formula() {
  Rng rng(1002);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.below(48);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] = static_cast<double>(i + 1);
    rng.shuffle(std::span(x));
    rng.shuffle(std::span(y));
    worst = std::max(worst, std::abs(spearman_values(x, y).rho - classical_spearman(x, y)));
  }
  return check(worst <= kRankTolerance, "max |diff| " + sci(worst));
}

Verdict table_reproduction() {
  if (!reference_data_present(kFixtureDir))
    return skip("published judgment data not found in " + kFixtureDir.string());
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = agreement_figures(load_reference_data(kFixtureDir));
  const double secs = seconds_since(t0);
  auto near = [](const std::optional<double>& v, double want) { return v && std::abs(*v - want) <= kTableTolerance; };
  const bool ok = near(f.rho_1_2, 0.59) && near(f.rho_4_5, 0.68) && near(f.avg_rest_4, 0.75) &&
                  near(f.mean_pairwise, 0.66) && f.max_pairwise_p < kSignificance && secs < kTableBudget;
  return check(ok, "rho(1,2)=" + format_optional(f.rho_1_2, 4) + " rho(4,5)=" + format_optional(f.rho_4_5, 4) +
                       " avg-rest(4)=" + format_optional(f.avg_rest_4, 4) + " mean=" + num(f.mean_pairwise) +
                       " max p=" + format_p(f.max_pairwise_p) + ", " + num(secs, 3) + " s");
}

Verdict means_reproduction() {
  if (!reference_data_present(kFixtureDir) || !fs::exists(kFixtureDir / "classes.csv"))
    return skip("published judgment data or classes.csv not found in " + kFixtureDir.string());
  const auto m = class_means(load_reference_data(kFixtureDir));
  const bool ok = m.reductive && m.innovative && std::abs(*m.reductive - 0.39) <= kMeansTolerance &&
                  std::abs(*m.innovative + 0.18) <= kMeansTolerance;
  return check(ok, "reductive " + format_optional(m.reductive, 4) + " (" + std::to_string(m.n_reductive) +
                       " targets), innovative " + format_optional(m.innovative, 4) + " (" +
                       std::to_string(m.n_innovative) + " targets)");
}

// ---------------------------------------------------------------------------

std::vector<Use> synthetic_pool(const TargetSpec& t, std::size_t n, int year0, const std::string& tag) {
  std::vector<Use> out;
  for (std::size_t i = 0; i < n; ++i) {
    Use u;
    u.use_id = tag + std::to_string(i) + ":0:0";
    u.target = t;
    u.doc_id = tag + std::to_string(i);
    u.year = year0 + static_cast<int>(i % 50);
    u.sent_text = "text " + u.use_id;
    out.push_back(u);
  }
  return out;
}

std::string sampling_violation(const std::vector<UsePair>& pairs, std::size_t k, std::size_t n1, std::size_t n2) {
  std::map<GroupId, std::size_t> per;
  std::map<GroupId, std::map<std::string, int>> uses;
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    ++per[p.group];
    if (!ids.insert(p.pair_id).second) return "duplicate pair_id " + p.pair_id;
    if (p.first.use_id == p.second.use_id) return "self pair " + p.pair_id;
    if (p.group == GroupId::kCompare && !(p.first.year < 1800 && p.second.year >= 1850))
      return "COMPARE pair " + p.pair_id + " does not span periods";
    if (p.group == GroupId::kEarlier && (p.first.year >= 1800 || p.second.year >= 1800))
      return "EARLIER pair " + p.pair_id + " leaves its period";
    if (p.group == GroupId::kLater && (p.first.year < 1850 || p.second.year < 1850))
      return "LATER pair " + p.pair_id + " leaves its period";
    ++uses[p.group][p.first.use_id];
    ++uses[p.group][p.second.use_id];
  }
  for (GroupId g : kAllGroups) {
    if (per[g] != k) return std::string(to_string(g)) + " has " + std::to_string(per[g]) + " pairs";
    for (const auto& [id, c] : uses[g]) {
      if (c > 2) return id + " used " + std::to_string(c) + " times in " + std::string(to_string(g));
      bool roomy = false;
      if (g == GroupId::kEarlier) roomy = n1 >= 2 * k;
      if (g == GroupId::kLater) roomy = n2 >= 2 * k;
      if (g == GroupId::kCompare) roomy = (id.front() == 'e' ? n1 : n2) >= k;
      if (roomy && c > 1) return id + " reused in " + std::string(to_string(g)) + " although the pool is large enough";
    }
  }
  return {};
}

std::string sample_bytes(const std::vector<Use>& e, const std::vector<Use>& l, const TargetSpec& t, std::size_t k,
                         std::uint64_t seed) {
  Rng rng(seed);
  SamplingConfig cfg;
  cfg.pairs_per_group = k;
  const auto pairs = build_study_pairs(t, e, l, cfg, rng);
  const auto [task, key] = build_task(pairs, rng);
  std::ostringstream out;
  write_task(out, task);
  write_key(out, key);
  return out.str();
}

Verdict sampling_invariants() {
  Rng sizes(1005);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t k = 1 + sizes.below(25);
    const std::size_t n1 = std::max<std::size_t>(k, 2) + sizes.below(2 * k + 5);
    const std::size_t n2 = std::max<std::size_t>(k, 2) + sizes.below(2 * k + 5);
    const TargetSpec t{"Wort", "NN"};
    const auto e = synthetic_pool(t, n1, 1750, "e");
    const auto l = synthetic_pool(t, n2, 1850, "l");
    SamplingConfig cfg;
    cfg.pairs_per_group = k;
    Rng rng(seed);
    std::vector<UsePair> pairs;
    try {
      pairs = build_study_pairs(t, e, l, cfg, rng);
    } catch (const Error& err) {
      return fail("seed " + std::to_string(seed) + ": " + err.what());
    }
    if (auto v = sampling_violation(pairs, k, n1, n2); !v.empty())
      return fail("seed " + std::to_string(seed) + " (k=" + std::to_string(k) + ", pools " + std::to_string(n1) +
                  "/" + std::to_string(n2) + "): " + v);
    const auto [task, key] = build_task(pairs, rng);
    for (const auto& entry : key.entries())
      if (entry.group == GroupId::kCompare && ((entry.year1 < 1800) == (entry.year2 < 1800)))
        return fail("seed " + std::to_string(seed) + ": key COMPARE entry within one period");
    if (sample_bytes(e, l, t, k, seed) != sample_bytes(e, l, t, k, seed))
      return fail("seed " + std::to_string(seed) + ": repeated run differs");
  }
  return pass("200 seeded runs, k in 1..25, pools from k to 3k+4");
}

// ---------------------------------------------------------------------------

struct SyntheticStudy {
  SyntheticCorpus corpus;
  AnnotationTask task;
  TaskKey key;
  std::string task_csv;
  std::string key_csv;
};

SyntheticStudy synthetic_study(const std::vector<SyntheticTarget>& targets, std::uint64_t seed) {
  SyntheticStudy s;
  s.corpus = make_corpus(targets, 40, seed);
  std::istringstream in(s.corpus.vertical);
  const Corpus corpus = import_vertical(in);
  Rng rng(seed);
  std::vector<UsePair> pairs;
  for (const auto& t : targets) {
    const TargetSpec spec{t.lemma, "NN"};
    auto p = build_study_pairs(spec, extract_uses(corpus, spec, s.corpus.early), extract_uses(corpus, spec, s.corpus.late),
                               SamplingConfig{}, rng);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  std::tie(s.task, s.key) = build_task(pairs, rng);
  std::ostringstream t, k;
  write_task(t, s.task);
  write_key(k, s.key);
  s.task_csv = t.str();
  s.key_csv = k.str();
  return s;
}

/// Key metadata an annotator must never see.
std::vector<std::string> forbidden_strings(const SyntheticStudy& s) {
  std::set<std::string> out{s.corpus.early.label, s.corpus.late.label};
  for (GroupId g : kAllGroups) out.insert(std::string(to_string(g)));
  for (const auto& e : s.key.entries()) {
    out.insert(std::to_string(e.year1));
    out.insert(std::to_string(e.year2));
  }
  return {out.begin(), out.end()};
}

std::string leak(const std::string& text, const std::vector<std::string>& forbidden) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& f : forbidden) {
    std::string lf = f;
    std::transform(lf.begin(), lf.end(), lf.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.find(lf) != std::string::npos) return f;
  }
  return {};
}

const char* kLemmas[] = {"Abendmahl", "Donnerwetter", "Feder", "Presse", "Zufall", "Museum", "Steckenpferd",
                         "Vorwort", "Ausdruck", "Anstalt", "Bilanz", "Eintagsfliege", "Festspiel", "Knotenpunkt",
                         "Kubikmeter", "Motiv", "Manschette", "Pachtzins", "Zuckerbrot", "Ackergerät",
                         "Armenhaus", "Mulde"};

Verdict blinding() {
  std::vector<SyntheticTarget> targets;
  for (const char* l : kLemmas) targets.push_back({l, Scenario::kInnovative});
  const auto s = synthetic_study(targets, 42);
  if (s.task.rows.size() != 1320) return fail("synthetic study has " + std::to_string(s.task.rows.size()) + " rows");
  const auto forbidden = forbidden_strings(s);
  if (auto f = leak(s.task_csv, forbidden); !f.empty()) return fail("task file contains '" + f + "'");

  TempDir dir;
  LocalServer server(dir.path());
  auto client = server.client();
  const Json roster = Json::array({Json{{"id", "1"}, {"token", "a1"}}, Json{{"id", "2"}, {"token", "a2"}}});
  auto put = client.Put("/studies/blind", Json{{"task_csv", s.task_csv}, {"key_csv", s.key_csv}, {"roster", roster}}.dump(),
                        "application/json");
  if (!put || put->status != 201) return fail("study upload failed");

  std::size_t scanned = 0;
  auto scan = [&](const httplib::Result& r) -> std::string {
    if (!r) return "request failed";
    ++scanned;
    if (auto f = leak(r->body, forbidden); !f.empty()) return "response contains '" + f + "': " + r->body.substr(0, 200);
    return {};
  };
  const auto auth = bearer("a1");
  for (;;) {
    auto next = client.Get("/studies/blind/annotators/1/next", auth);
    if (auto e = scan(next); !e.empty()) return fail(e);
    const auto body = Json::parse(next->body);
    if (body["done"].get<bool>()) break;
    const Json submit{{"pair_id", body["pair_id"]}, {"value", 1 + static_cast<int>(scanned % 4)}};
    if (auto e = scan(client.Post("/studies/blind/annotators/1/judgments", auth, submit.dump(), "application/json"));
        !e.empty())
      return fail(e);
  }
  // Retries, conflicts and rejected requests are annotator-facing too.
  const std::string first = s.task.rows.front().pair_id;
  for (const Json& body : {Json{{"pair_id", first}, {"value", 4}}, Json{{"pair_id", first}, {"value", 9}},
                           Json{{"pair_id", "nope"}, {"value", 1}}}) {
    if (auto e = scan(client.Post("/studies/blind/annotators/1/judgments", auth, body.dump(), "application/json"));
        !e.empty())
      return fail(e);
  }
  if (auto e = scan(client.Get("/studies/blind/annotators/2/next", auth)); !e.empty()) return fail(e);
  if (auto e = scan(client.Get("/studies/blind/annotators/2/next", bearer("a2"))); !e.empty()) return fail(e);
  return pass("1320-row task file and " + std::to_string(scanned) + " annotator responses scanned for " +
              std::to_string(forbidden.size()) + " key strings");
}

// ---------------------------------------------------------------------------

Verdict end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<SyntheticTarget> targets{
      {"Donnerwetter", Scenario::kInnovative}, {"Zufall", Scenario::kReductive}, {"Feder", Scenario::kStable}};
  const std::map<std::string, ChangeClass> expected{{"Donnerwetter", ChangeClass::kInnovative},
                                                    {"Zufall", ChangeClass::kReductive},
                                                    {"Feder", ChangeClass::kStable}};
  int correct = 0;
  std::string first_miss;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto s = synthetic_study(targets, seed);
    std::vector<Judgment> js;
    for (int a = 1; a <= 5; ++a) {
      std::istringstream filled(filled_task_csv(s.task, simulate_annotator(s.task, s.key, s.corpus.sense_of, 0.05,
                                                                           seed * 10 + static_cast<std::uint64_t>(a))));
      auto r = ingest_filled_task(filled, std::to_string(a), s.key);
      js.insert(js.end(), r.judgments.begin(), r.judgments.end());
    }
    const auto rows = analyze_targets(assemble_matrix(js, s.key), s.key, 0.1);
    bool ok = rows.size() == 3;
    for (const auto& r : rows) {
      const bool hit = r.change_class && *r.change_class == expected.at(r.means.target.lemma);
      if (!hit && first_miss.empty())
        first_miss = "seed " + std::to_string(seed) + " " + r.means.target.lemma + " delta_later=" +
                     format_optional(r.measures.delta_later, 4);
      ok = ok && hit;
    }
    correct += ok;
  }
  const double secs = seconds_since(t0);
  return check(correct >= kEndToEndRequired && secs < kEndToEndBudget,
               std::to_string(correct) + "/100 seeds fully correct, " + num(secs, 2) + " s" +
                   (first_miss.empty() ? "" : "; first miss: " + first_miss));
}

// ---------------------------------------------------------------------------

struct Service {
  std::unique_ptr<ChildProcess> process;
  int port = 0;
};

Service start_service(const fs::path& data, const fs::path& task, const fs::path& key) {
  Service s;
  s.process = std::make_unique<ChildProcess>(std::vector<std::string>{
      kCli, "serve", "--data-dir", data.string(), "--port", "0", "--admin-token", "adm", "--study-id", "dur", "--task",
      task.string(), "--key", key.string(), "--roster", "1:t1,2:t2,3:t3"});
  static const std::regex listening(R"(listening on [^:]+:(\d+))");
  for (std::string line; s.process->read_line(line);) {
    std::smatch m;
    if (std::regex_search(line, m, listening)) {
      s.port = std::stoi(m[1]);
      return s;
    }
  }
  throw std::runtime_error("service did not report a port");
}

struct Snapshot {
  std::string exported;
  std::string progress;
};

Snapshot snapshot(int port) {
  httplib::Client c("127.0.0.1", port);
  auto e = c.Get("/studies/dur/export", bearer("adm"));
  auto p = c.Get("/studies/dur/progress", bearer("adm"));
  if (!e || !p || e->status != 200 || p->status != 200) throw std::runtime_error("snapshot request failed");
  return {e->body, p->body};
}

Verdict durability() {
  TempDir dir;
  const auto s = synthetic_study({{"Feder", Scenario::kStable}, {"Zufall", Scenario::kReductive}}, 7);
  write_text(dir.path() / "task.csv", s.task_csv);
  write_text(dir.path() / "key.csv", s.key_csv);
  const fs::path data = dir.path() / "data";

  auto submit_range = [&](int port, const std::string& who, std::size_t from, std::size_t to,
                          std::vector<std::string>* acked) {
    httplib::Client c("127.0.0.1", port);
    for (std::size_t i = from; i < to && i < s.task.rows.size(); ++i) {
      const Json body{{"pair_id", s.task.rows[i].pair_id}, {"value", static_cast<int>((i * 7 + who[0]) % 5)}};
      auto r = c.Post("/studies/dur/annotators/" + who + "/judgments", bearer("t" + who), body.dump(), "application/json");
      if (!r) return;  // service gone
      if (r->status != 200) throw std::runtime_error("submission rejected: " + r->body);
      if (acked) acked->push_back(who + "/" + s.task.rows[i].pair_id);
    }
  };

  // Quiescent kill: state before SIGKILL must come back byte for byte.
  Snapshot before;
  {
    auto svc = start_service(data, dir.path() / "task.csv", dir.path() / "key.csv");
    submit_range(svc.port, "1", 0, 40, nullptr);
    submit_range(svc.port, "2", 0, 17, nullptr);
    before = snapshot(svc.port);
    svc.process->kill(SIGKILL);
  }
  Snapshot after;
  {
    auto svc = start_service(data, dir.path() / "task.csv", dir.path() / "key.csv");
    after = snapshot(svc.port);
    if (after.exported != before.exported) return fail("export differs after restart");
    if (after.progress != before.progress) return fail("progress differs after restart: " + after.progress);

    // Kill during a burst of submissions from three annotators.
    std::vector<std::string> acked[3];
    std::vector<std::thread> writers;
    for (int a = 0; a < 3; ++a)
      writers.emplace_back([&, a] {
        try {
          submit_range(svc.port, std::to_string(a + 1), 40, 120, &acked[a]);
        } catch (const std::exception&) {
        }
      });
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    svc.process->kill(SIGKILL);
    for (auto& w : writers) w.join();

    auto again = start_service(data, dir.path() / "task.csv", dir.path() / "key.csv");
    const auto first = snapshot(again.port);
    again.process->kill(SIGKILL);
    auto third = start_service(data, dir.path() / "task.csv", dir.path() / "key.csv");
    const auto second = snapshot(third.port);
    if (first.exported != second.exported || first.progress != second.progress)
      return fail("repeated replay after a mid-burst kill is not stable");
    std::istringstream in(first.exported);
    std::set<std::string> stored;
    for (const auto& j : read_judgments(in)) stored.insert(j.annotator + "/" + j.pair_id);
    std::size_t total_acked = 0;
    for (const auto& list : acked)
      for (const auto& id : list) {
        ++total_acked;
        if (!stored.contains(id)) return fail("acknowledged judgment " + id + " lost");
      }
    third.process->kill(SIGTERM);
    return pass("57 judgments identical after SIGKILL; " + std::to_string(total_acked) +
                " acknowledged mid-burst judgments all replayed");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"spearman matches brute-force oracle on 1000 tied vectors", spearman_oracle},
      {"spearman matches 1 - 6 sum d^2 / (n(n^2-1)) on 1000 permutations", classical_formula},
      {"agreement on published data: rho(1,2), rho(4,5), avg-vs-rest(4), mean, p", table_reproduction},
      {"mean delta_later per published class: reductive 0.39, innovative -0.18", means_reproduction},
      {"sampling invariants over 200 seeds and byte-identical reruns", sampling_invariants},
      {"no key metadata in task file or annotator responses (1320 rows)", blinding},
      {"synthetic innovative/reductive/stable classified in >= 95 of 100 seeds", end_to_end},
      {"kill -9 and restart replays to identical progress and export", durability},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    failed += v.outcome == Outcome::kFail;
    std::printf("%s  %s  [%s]\n", tag, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
