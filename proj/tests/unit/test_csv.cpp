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

#include "durel/csv.hpp"
#include "durel/timestamp.hpp"
#include "gtest/gtest.h"

using namespace durel;

TEST(Csv, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv::quote("plain"), "plain");
  EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::quote("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, ParsesQuotedFieldsAcrossLines) {
  const auto doc = csv::parse("# seed=1\na,b\n\"x,1\",\"multi\nline\"\r\n\"q\"\"\",\n");
  ASSERT_EQ(doc.comments.size(), 1u);
  EXPECT_EQ(doc.comments[0], " seed=1");
  ASSERT_EQ(doc.records.size(), 3u);
  EXPECT_EQ(doc.records[1].fields, (std::vector<std::string>{"x,1", "multi\nline"}));
  EXPECT_EQ(doc.records[2].fields, (std::vector<std::string>{"q\"", ""}));
  EXPECT_EQ(doc.records[2].line, 5u);
}

TEST(Csv, WriteParseRoundTrip) {
  const std::vector<std::string> fields{"", "a", "b,c", "\"", "x\ny", " lead", "<<T>>"};
  std::ostringstream out;
  csv::write_row(out, fields);
  csv::write_row(out, fields);
  const auto doc = csv::parse(out.str());
  ASSERT_EQ(doc.records.size(), 2u);
  EXPECT_EQ(doc.records[0].fields, fields);
  EXPECT_EQ(doc.records[1].fields, fields);
}

TEST(Csv, Malformed) {
  EXPECT_THROW(csv::parse("a,\"open\n"), ParseError);
  EXPECT_THROW(csv::parse("a,\"x\"y\n"), ParseError);
  EXPECT_THROW(csv::parse("a\"b\n"), ParseError);
}

TEST(Timestamp, FormatAndParse) {
  const auto ts = parse_timestamp("2026-10-17T12:34:56.789Z");
  ASSERT_TRUE(ts);
  EXPECT_EQ(format_timestamp(*ts), "2026-10-17T12:34:56.789Z");
  EXPECT_EQ(format_timestamp(*parse_timestamp("2020-02-29T00:00:00Z")), "2020-02-29T00:00:00.000Z");
  EXPECT_FALSE(parse_timestamp("2021-02-29T00:00:00Z"));
  EXPECT_FALSE(parse_timestamp("2021-01-01 00:00:00"));
  EXPECT_FALSE(parse_timestamp(""));
  const auto now = now_utc();
  EXPECT_EQ(parse_timestamp(format_timestamp(now)), now);
}
