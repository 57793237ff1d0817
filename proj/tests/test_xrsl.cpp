// Copyright 2026 The ngtestbed Authors.
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

#include <gtest/gtest.h>

#include "generators.hpp"
#include "ng/xrsl.hpp"

using namespace ng;
using namespace ng::xrsl;

TEST(Xrsl, ParsesScalarRelations) {
  Document d = parse(R"(&(executable="run.sh")(cputime=60))");
  ASSERT_EQ(d.relations.size(), 2u);
  EXPECT_EQ(d.relations[0].attribute, "executable");
  EXPECT_EQ(d.relations[0].values.scalar(), "run.sh");
  EXPECT_EQ(d.relations[1].attribute, "cputime");
  EXPECT_EQ(d.relations[1].values.scalar(), "60");
}

TEST(Xrsl, ParsesTuples) {
  Document d = parse(R"(&(inputfiles=("data.in" "ngse://se1:39100/d/data.in")))");
  ASSERT_EQ(d.relations.size(), 1u);
  ASSERT_FALSE(d.relations[0].values.is_scalar());
  const auto& t = d.relations[0].values.tuples();
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (Tuple{"data.in", "ngse://se1:39100/d/data.in"}));
}

TEST(Xrsl, UnterminatedDocumentErrorsAtEnd) {
  std::string text = R"(&(executable="a")";
  ASSERT_EQ(text.size(), 16u);
  try {
    parse(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 17u);
  }
}

TEST(Xrsl, SyntaxErrors) {
  for (const char* bad : {"", "&", "&(", "(executable=a)", "&(executable=\"a)", "&(executable=a))", "&(=a)",
                          "&(executable=)", "&(a=(b)"}) {
    EXPECT_THROW(parse(bad), ParseError) << bad;
  }
}

TEST(Xrsl, MapsToJobDescription) {
  JobDescription j = parse_job(R"(&(executable="run.sh")(cputime=60))");
  JobDescription want;
  want.executable = "run.sh";
  want.cputime = 60;
  EXPECT_EQ(j, want);
  EXPECT_EQ(j.action, Action::Submit);
}

TEST(Xrsl, ActionOnlyDocument) {
  JobDescription j = parse_job(R"(&(action="cancel"))");
  EXPECT_EQ(j.action, Action::Cancel);
  EXPECT_TRUE(j.executable.empty());
}

TEST(Xrsl, RejectsNonIntegerCputime) {
  try {
    parse_job(R"(&(executable="a")(cputime="many"))");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "cputime: not an integer");
  }
}

TEST(Xrsl, RejectsUnknownAttributesAndEscapes) {
  EXPECT_THROW(parse_job(R"(&(executable="a")(colour="red"))"), ValidationError);
  EXPECT_THROW(parse_job(R"(&(executable="a")(inputfiles=("../x" "")))"), ValidationError);
  EXPECT_THROW(parse_job(R"(&(executable="a")(outputfiles=("/etc/passwd" "")))"), ValidationError);
  EXPECT_THROW(parse_job(R"(&(cputime=5))"), ValidationError);
}

TEST(Xrsl, CanonicalSerialization) {
  JobDescription j;
  j.executable = "a";
  j.cputime = 60;
  EXPECT_EQ(serialize(j), R"(&(cputime="60")(executable="a"))");
  JobDescription x;
  x.executable = "x";
  EXPECT_EQ(serialize(x), R"(&(executable="x"))");
}

TEST(Xrsl, QuotesAndBackslashesSurvive) {
  JobDescription j;
  j.executable = R"(say "hi" \ bye)";
  EXPECT_EQ(parse_job(serialize(j)), j);
}

TEST(XrslProperty, RoundTrip) {
  gen::Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    JobDescription j = gen::job(rng);
    std::string text = serialize(j);
    ASSERT_EQ(parse_job(text), j) << text;
    // canonical form is a fixed point
    EXPECT_EQ(serialize(parse_job(text)), text);
  }
}

TEST(XrslProperty, ParserIsTotal) {
  gen::Rng rng(22);
  for (int i = 0; i < 5000; ++i) {
    std::string text = gen::mutate(rng, serialize(gen::job(rng)));
    try {
      parse_job(text);
    } catch (const ParseError& e) {
      EXPECT_GE(e.position(), 1u);
      EXPECT_LE(e.position(), text.size() + 1);
    } catch (const ValidationError&) {
    }
  }
}
