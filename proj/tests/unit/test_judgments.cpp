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

#include <sstream>

#include "durel/judgments.hpp"
#include "gtest/gtest.h"

using namespace durel;

namespace {

TaskKey key_of(int n) {
  TaskKey key;
  for (int i = 1; i <= n; ++i)
    key.add({"w-" + std::to_string(i), {"w", std::nullopt}, GroupId::kEarlier, "a", "b", 1780, 1790});
  return key;
}

AnnotationTask task_of(int n) {
  AnnotationTask t;
  for (int i = 1; i <= n; ++i) t.rows.push_back({"w-" + std::to_string(i), {"", "eins", ""}, {"", "zwei", ""}});
  return t;
}

std::string filled(const AnnotationTask& t, const std::vector<std::string>& cells) {
  std::ostringstream o;
  write_task(o, t, cells);
  return o.str();
}

Judgment j(const std::string& a, const std::string& p, int v, const char* ts = nullptr) {
  return {a, p, JudgmentValue::of(v), ts ? parse_timestamp(ts) : std::nullopt};
}

}  // namespace

TEST(JudgmentValue, RangeAndParsing) {
  for (int v = 0; v <= 4; ++v) EXPECT_EQ(JudgmentValue::of(v).value(), v);
  EXPECT_THROW(JudgmentValue::of(5), ValidationError);
  EXPECT_THROW(JudgmentValue::of(-1), ValidationError);
  EXPECT_FALSE(JudgmentValue::of(0).is_rating());
  EXPECT_TRUE(JudgmentValue::of(1).is_rating());
  EXPECT_EQ(JudgmentValue::parse(" 3 ")->value(), 3);
  for (const char* bad : {"5", "-1", "3.0", "a", "", "03", "1 2"}) EXPECT_FALSE(JudgmentValue::parse(bad)) << bad;
}

TEST(IngestFilledTask, ValueFiveNamesPairAndRow) {
  const auto key = key_of(3);
  std::istringstream in(filled(task_of(3), {"1", "5", "2"}));
  try {
    ingest_filled_task(in, "A", key);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("w-2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  }
}

TEST(IngestFilledTask, EmptyCellsAreMissing) {
  const auto key = key_of(10);
  std::istringstream in(filled(task_of(10), {"1", "", "2", "3", "", "4", "0", " ", "1", "2"}));
  const auto r = ingest_filled_task(in, "A", key);
  EXPECT_EQ(r.judgments.size(), 7u);
  EXPECT_EQ(r.missing, (std::vector<std::string>{"w-2", "w-5", "w-8"}));
  EXPECT_EQ(r.judgments[4].value.value(), 0);
  EXPECT_EQ(r.judgments[0].annotator, "A");
}

TEST(IngestFilledTask, FullStudySize) {
  const auto key = key_of(1320);
  std::istringstream in(filled(task_of(1320), std::vector<std::string>(1320, "3")));
  EXPECT_EQ(ingest_filled_task(in, "A", key).judgments.size(), 1320u);
}

TEST(IngestFilledTask, UnknownAndDuplicatePairs) {
  const auto key = key_of(2);
  auto t = task_of(3);
  std::istringstream unknown(filled(t, {"1", "1", "1"}));
  EXPECT_THROW(ingest_filled_task(unknown, "A", key), ValidationError);
  t.rows[2].pair_id = "w-1";
  std::istringstream dup(filled(t, {"1", "1", "1"}));
  EXPECT_THROW(ingest_filled_task(dup, "A", key_of(3)), ValidationError);
}

TEST(AssembleMatrix, CompleteAndMissingCells) {
  const auto key = key_of(3);
  std::vector<Judgment> js;
  for (const char* a : {"A", "B"})
    for (int p = 1; p <= 3; ++p) js.push_back(j(a, "w-" + std::to_string(p), p));
  EXPECT_EQ(assemble_matrix(js, key).filled_count(), 6u);
  js.erase(js.begin() + 1);
  const auto m = assemble_matrix(js, key);
  EXPECT_EQ(m.filled_count(), 5u);
  EXPECT_FALSE(m.at(*m.pair_index("w-2"), *m.annotator_index("A")));
  EXPECT_EQ(m.annotators()[0], "A");
}

TEST(AssembleMatrix, FiveByThirteenTwenty) {
  const auto key = key_of(1320);
  std::vector<Judgment> js;
  for (int a = 1; a <= 5; ++a)
    for (const auto& e : key.entries()) js.push_back(j(std::to_string(a), e.pair_id, 1 + a % 4));
  const auto m = assemble_matrix(js, key);
  EXPECT_EQ(m.pair_count(), 1320u);
  EXPECT_EQ(m.annotator_count(), 5u);
}

TEST(AssembleMatrix, DuplicatePolicies) {
  const auto key = key_of(1);
  const std::vector<Judgment> same{j("A", "w-1", 3), j("A", "w-1", 3)};
  EXPECT_EQ(assemble_matrix(same, key).filled_count(), 1u);
  const std::vector<Judgment> clash{j("A", "w-1", 3, "2026-01-01T10:00:00Z"), j("A", "w-1", 1, "2026-01-01T09:00:00Z")};
  try {
    assemble_matrix(clash, key);
    FAIL();
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.stored_value(), 3);
  }
  // The earlier-stamped 1 loses despite arriving later.
  EXPECT_EQ(assemble_matrix(clash, key, DuplicatePolicy::kLatestWins).at(0, 0)->value(), 3);
  const std::vector<Judgment> unstamped{j("A", "w-1", 3), j("A", "w-1", 1)};
  EXPECT_EQ(assemble_matrix(unstamped, key, DuplicatePolicy::kLatestWins).at(0, 0)->value(), 1);
  EXPECT_EQ(parse_policy("latest-wins"), DuplicatePolicy::kLatestWins);
  EXPECT_FALSE(parse_policy("newest"));
}

TEST(AssembleMatrix, UnknownPairRejected) {
  const std::vector<Judgment> js{j("A", "nope", 1)};
  EXPECT_THROW(assemble_matrix(js, key_of(1)), ValidationError);
}

TEST(Judgments, IngestAssembleExportRoundTrip) {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    const auto key = key_of(n);
    const auto task = task_of(n);
    std::vector<Judgment> all;
    for (const char* a : {"1", "2", "3"}) {
      std::vector<std::string> cells;
      for (int i = 0; i < n; ++i) cells.push_back(i > 0 && rng.below(4) == 0 ? "" : std::to_string(rng.below(5)));
      std::istringstream in(filled(task, cells));
      const auto r = ingest_filled_task(in, a, key);
      all.insert(all.end(), r.judgments.begin(), r.judgments.end());
    }
    const auto m = assemble_matrix(all, key);
    std::stringstream csv;
    const auto flat = m.to_judgments();
    write_judgments(csv, flat);
    const auto back = read_judgments(csv);
    EXPECT_EQ(assemble_matrix(back, key), m);
  }
}

TEST(Judgments, ReadRejectsMalformedRows) {
  std::istringstream bad_value("pair_id,annotator,value,timestamp\nw-1,A,9,\n");
  EXPECT_THROW(read_judgments(bad_value), ParseError);
  std::istringstream bad_ts("pair_id,annotator,value,timestamp\nw-1,A,2,yesterday\n");
  EXPECT_THROW(read_judgments(bad_ts), ParseError);
  std::istringstream ok("pair_id,annotator,value,timestamp\nw-1,A,2,2026-01-01T00:00:00.000Z\n");
  EXPECT_EQ(read_judgments(ok).at(0).timestamp, parse_timestamp("2026-01-01T00:00:00Z"));
}
