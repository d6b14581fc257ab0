#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "vdlab/error.hpp"
#include "vdlab/md5.hpp"
#include "vdlab/preprocess.hpp"
#include "vdlab/rng.hpp"

using namespace vdlab;
using vdlab::testing::corpus_of;
using vdlab::testing::rec;

TEST_CASE("md5 reference vectors") {
  CHECK(md5_hex("") == "d41d8cd98f00b204e9800998ecf8427e");
  CHECK(md5_hex("abc") == "900150983cd24fb0d6963f7d28e17f72");
  CHECK(md5_hex("message digest") == "f96b697d7cb7938d525a2f31aaf161d0");
}

TEST_CASE("streaming md5 equals one-shot") {
  const std::string text(3000, 'q');
  Md5 stream;
  stream.update(text.substr(0, 7));
  stream.update(text.substr(7, 1000));
  stream.update(text.substr(1007));
  CHECK(stream.hex() == md5_hex(text));
}

TEST_CASE("normalize_function strips exactly the four whitespace characters") {
  CHECK(normalize_function("int a;") == "inta;");
  CHECK(normalize_function("int\tmain()\r\n{ return 0; }") == "intmain(){return0;}");
  CHECK(normalize_function("") == "");
  // Vertical tab and form feed are NOT normalized away.
  CHECK(normalize_function("a\vb\fc") == "a\vb\fc");

  // Property: for random byte strings, the result equals a reference filter
  // and the removed count is exactly the whitespace count.
  const std::string alphabet = "ab{}();\t\n\r <>=\xC3\xA9";
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const auto len = rng.below(120);
    for (std::uint64_t i = 0; i < len; ++i)
      s += alphabet[static_cast<std::size_t>(rng.below(alphabet.size()))];

    std::string expected;
    std::size_t removed = 0;
    for (char ch : s) {
      if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r')
        ++removed;
      else
        expected += ch;
    }
    const std::string got = normalize_function(s);
    CHECK(got == expected);
    CHECK(got.size() == s.size() - removed);
    CHECK(normalize_function(got) == got);  // idempotent
  }
}

TEST_CASE("content_hash is md5 of the normalized text") {
  CHECK(content_hash(normalize_function("int a;")) ==
        "1872a785088e63694e9916a5db0f2ba7");
  CHECK(content_hash(normalize_function("int main() { return 0; }")) ==
        content_hash(normalize_function("int main(){return 0;}")));
}

TEST_CASE("deduplicate keeps first occurrences and counts conflicts") {
  const Corpus c = corpus_of({
      rec("a", "int f() { return 1; }", 1, {125}, "", "s1"),
      rec("b", "int g() { return 2; }", 0, {}, "", "s1"),
      rec("c", "int f()  {  return 1;  }", 0, {}, "", "s2"),  // dup of a, label flip
      rec("d", "int g(){return 2;}", 0, {}, "", "s2"),        // dup of b
      rec("e", "int h() { return 3; }", 1, {787}, "", "s2"),
  });

  const DedupResult res = deduplicate(c);
  CHECK(res.report.input == 5);
  CHECK(res.report.kept == 3);
  CHECK(res.report.dropped == 2);
  CHECK(res.report.label_conflicts == 1);
  CHECK(res.report.by_source.at("s2") == 2);

  REQUIRE(res.corpus.records.size() == 3);
  CHECK(res.corpus.records[0].id == "a");
  CHECK(res.corpus.records[1].id == "b");
  CHECK(res.corpus.records[2].id == "e");
  CHECK(res.corpus.records[0].vulnerable());  // first occurrence's label wins

  // Survivors have pairwise-distinct content hashes.
  std::vector<std::string> hashes;
  for (const auto& r : res.corpus.records)
    hashes.push_back(content_hash(normalize_function(r.code)));
  for (std::size_t i = 0; i < hashes.size(); ++i)
    for (std::size_t j = i + 1; j < hashes.size(); ++j)
      CHECK(hashes[i] != hashes[j]);

  // Idempotent: a second pass drops nothing.
  const DedupResult again = deduplicate(res.corpus);
  CHECK(again.report.dropped == 0);
  CHECK(again.corpus.records.size() == res.corpus.records.size());

  const std::string json = res.report.to_json();
  CHECK(json.find("\"label_conflicts\": 1") != std::string::npos);
}

TEST_CASE("filter_length keeps 4000 and drops 4001") {
  std::string wide;  // 4000 scalars, 8000 bytes: length is counted in scalars
  for (int i = 0; i < 4000; ++i) wide += "\xC3\xA9";
  const Corpus c = corpus_of({
      rec("keep_edge", std::string(4000, 'x'), 1, {125}),
      rec("drop_edge", std::string(4001, 'x'), 1, {125}),
      rec("keep_wide", wide, 0),
      rec("keep_small", "f();", 0),
  });

  const LengthFilterResult res = filter_length(c, 4000);
  CHECK(res.report.max_len == 4000);
  CHECK(res.report.kept_vulnerable == 1);
  CHECK(res.report.dropped_vulnerable == 1);
  CHECK(res.report.kept_non_vulnerable == 2);
  CHECK(res.report.dropped_non_vulnerable == 0);
  REQUIRE(res.corpus.records.size() == 3);
  CHECK(res.corpus.records[0].id == "keep_edge");

  CHECK_THROWS_AS(filter_length(c, 0), UserError);
}
