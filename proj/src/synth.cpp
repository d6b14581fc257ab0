#include "vdlab/synth.hpp"

#include <algorithm>
#include <cmath>

#include "vdlab/error.hpp"
#include "vdlab/rng.hpp"

// Template design notes. Vulnerable and fixed variants of one family share
// everything but the defect idiom (a missing guard, a swapped statement
// order, string concatenation instead of a bound parameter), so the classes
// are separable only through those idioms. Identifier names, literals and
// padding comments are drawn from shared pools and carry no label signal;
// null-check "decoy" guards appear on both sides at the same rate so the
// mere presence of an if-statement is not a label either. Neutral utilities
// deliberately reuse family vocabulary (memcpy, free, atoi, range checks) as
// hard negatives.

namespace vdlab {
namespace {

struct Params {
  std::string name;
  std::string buf, src, dst, len, cnt, idx, val, q;
  std::string lit_small, lit_buf, lit_cap, lit_limit, lit_mul;
  int variant = 0;
  bool decoy = false;
  std::string padding;  // zero or more whole comment lines
};

const char* const kBufNames[] = {"buf", "data", "block", "bytes", "chunk", "frame"};
const char* const kSrcNames[] = {"src", "input", "raw", "payload", "text", "msg"};
const char* const kDstNames[] = {"dst", "out", "dest", "sink"};
const char* const kLenNames[] = {"len", "size", "cap", "total", "avail"};
const char* const kCntNames[] = {"count", "items", "nelem", "wanted"};
const char* const kIdxNames[] = {"idx", "pos", "off", "slot", "cursor"};
const char* const kValNames[] = {"v", "tmp", "value", "acc", "result"};
const char* const kQNames[] = {"query", "sql", "cmd", "stmt_text"};

const char* const kBase20[] = {"parse_level", "decode_count", "read_quota", "scan_limit"};
const char* const kBase89[] = {"lookup_user", "remove_session", "count_rows", "find_account"};
const char* const kBase119[] = {"copy_name", "import_label", "fill_record", "clone_text"};
const char* const kBase125[] = {"read_entry", "peek_value", "load_sample", "fetch_item"};
const char* const kBase416[] = {"close_buffer", "drop_handle", "recycle_node", "finish_block"};
const char* const kBase787[] = {"write_entry", "store_value", "put_sample", "emit_cell"};
const char* const kNeutralBase[] = {"sum_values",  "clamp_range",   "find_byte",
                                    "bounded_copy", "hash_block",   "release_items",
                                    "parse_flag",   "format_tag"};

template <std::size_t N>
std::string pick_one(Rng& rng, const char* const (&pool)[N]) {
  return pool[rng.below(N)];
}

std::string pick_lit(Rng& rng, std::initializer_list<int> choices) {
  const std::vector<int> v(choices);
  return std::to_string(v[rng.below(v.size())]);
}

std::string base_for(int family, Rng& rng) {
  switch (family) {
    case 20: return pick_one(rng, kBase20);
    case 89: return pick_one(rng, kBase89);
    case 119: return pick_one(rng, kBase119);
    case 125: return pick_one(rng, kBase125);
    case 416: return pick_one(rng, kBase416);
    case 787: return pick_one(rng, kBase787);
  }
  fail("unknown synthetic CWE family: CWE-" + std::to_string(family));
}

// The unique suffix keeps every generated body distinct, so a later
// content-hash dedup pass keeps all records and spec counts survive intact.
Params draw_params(Rng& rng, const std::string& base, std::uint64_t instance) {
  Params p;
  p.name = base + "_" + std::to_string(instance);
  p.buf = pick_one(rng, kBufNames);
  p.src = pick_one(rng, kSrcNames);
  p.dst = pick_one(rng, kDstNames);
  p.len = pick_one(rng, kLenNames);
  p.cnt = pick_one(rng, kCntNames);
  p.idx = pick_one(rng, kIdxNames);
  p.val = pick_one(rng, kValNames);
  p.q = pick_one(rng, kQNames);
  p.lit_small = std::to_string(1 + rng.below(9));
  p.lit_buf = pick_lit(rng, {16, 32, 64, 128, 256});
  p.lit_cap = pick_lit(rng, {32, 64, 128, 256, 512});
  p.lit_limit = pick_lit(rng, {1024, 2048, 4096, 8192});
  p.lit_mul = pick_lit(rng, {2, 3, 4, 8, 16});
  p.variant = static_cast<int>(rng.below(2));
  p.decoy = rng.below(2) == 1;

  const std::uint64_t npad = rng.below(3);
  for (std::uint64_t i = 0; i < npad; ++i) {
    const std::uint64_t form = rng.below(4);
    const std::string num = std::to_string(rng.below(10000));
    switch (form) {
      case 0: p.padding += "    /* reviewed in audit pass " + num + " */\n"; break;
      case 1: p.padding += "    /* refs ticket " + num + " */\n"; break;
      case 2: p.padding += "    // hot path, keep branch-light (" + num + ")\n"; break;
      default: p.padding += "    /* layout revision " + num + " */\n"; break;
    }
  }
  return p;
}

// Null-check prologue shared by both labels; ret == "" for void functions.
std::string decoy_guard(const Params& p, const std::string& cond, const std::string& ret) {
  if (!p.decoy) return {};
  std::string s = "    if (" + cond + ") {\n        return";
  if (!ret.empty()) s += " " + ret;
  s += ";\n    }\n";
  return s;
}

std::string render_125(const Params& p, bool vuln) {
  if (p.variant == 0) {
    std::string s = "int " + p.name + "(const int *" + p.buf + ", int " + p.len +
                    ", int " + p.idx + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.len + " == 0", "0");
    if (!vuln)
      s += "    if (" + p.idx + " < 0 || " + p.idx + " >= " + p.len +
           ") {\n        return -" + p.lit_small + ";\n    }\n";
    s += "    int " + p.val + " = " + p.buf + "[" + p.idx + "];\n";
    s += "    return " + p.val + " + " + p.lit_small + ";\n";
    s += "}";
    return s;
  }
  std::string s = "int " + p.name + "(const char *" + p.buf + ", int " + p.len +
                  ", int " + p.idx + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.buf + " == 0", "0");
  if (!vuln)
    s += "    if (" + p.idx + " < 0 || " + p.idx + " + " + p.lit_small + " >= " +
         p.len + ") {\n        return 0;\n    }\n";
  s += "    int " + p.val + " = 0;\n";
  s += "    " + p.val + " += " + p.buf + "[" + p.idx + " + " + p.lit_small + "];\n";
  s += "    return " + p.val + ";\n";
  s += "}";
  return s;
}

std::string render_787(const Params& p, bool vuln) {
  if (p.variant == 0) {
    std::string s = "void " + p.name + "(char *" + p.dst + ", int " + p.len + ", int " +
                    p.idx + ", char " + p.val + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.dst + " == 0", "");
    if (!vuln)
      s += "    if (" + p.idx + " < 0 || " + p.idx + " + 1 >= " + p.len +
           ") {\n        return;\n    }\n";
    s += "    " + p.dst + "[" + p.idx + "] = " + p.val + ";\n";
    s += "    " + p.dst + "[" + p.idx + " + 1] = '\\0';\n";
    s += "}";
    return s;
  }
  std::string s = "void " + p.name + "(int *" + p.dst + ", int " + p.len + ", int " +
                  p.cnt + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.dst + " == 0", "");
  s += "    int i;\n";
  if (vuln)
    s += "    for (i = 0; i <= " + p.cnt + "; i++) {\n";
  else
    s += "    for (i = 0; i < " + p.cnt + " && i < " + p.len + "; i++) {\n";
  s += "        " + p.dst + "[i] = i * " + p.lit_mul + ";\n";
  s += "    }\n";
  s += "}";
  return s;
}

std::string render_119(const Params& p, bool vuln) {
  if (p.variant == 0) {
    std::string s = "int " + p.name + "(const char *" + p.src + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.src + " == 0", "0");
    s += "    char " + p.buf + "[" + p.lit_buf + "];\n";
    if (vuln) {
      s += "    strcpy(" + p.buf + ", " + p.src + ");\n";
    } else {
      s += "    strncpy(" + p.buf + ", " + p.src + ", sizeof(" + p.buf + ") - 1);\n";
      s += "    " + p.buf + "[sizeof(" + p.buf + ") - 1] = '\\0';\n";
    }
    s += "    return (int)strlen(" + p.buf + ");\n";
    s += "}";
    return s;
  }
  std::string s = "void " + p.name + "(char *" + p.dst + ", const char *" + p.src +
                  ", int " + p.len + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.src + " == 0", "");
  if (!vuln)
    s += "    if (" + p.len + " > " + p.lit_cap + ") {\n        " + p.len + " = " +
         p.lit_cap + ";\n    }\n";
  s += "    memcpy(" + p.dst + ", " + p.src + ", (size_t)" + p.len + ");\n";
  s += "}";
  return s;
}

std::string render_20(const Params& p, bool vuln) {
  if (p.variant == 0) {
    std::string s = "int " + p.name + "(const char *" + p.src + ", const int *" + p.buf +
                    ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.src + " == 0", "-1");
    s += "    int " + p.val + " = atoi(" + p.src + ");\n";
    if (!vuln)
      s += "    if (" + p.val + " < 0 || " + p.val + " >= " + p.lit_buf +
           ") {\n        return -1;\n    }\n";
    s += "    return " + p.buf + "[" + p.val + "];\n";
    s += "}";
    return s;
  }
  std::string s = "long " + p.name + "(const char *" + p.src + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.src + " == 0", "0");
  s += "    long " + p.val + " = strtol(" + p.src + ", 0, 10);\n";
  if (!vuln)
    s += "    if (" + p.val + " < 0 || " + p.val + " > " + p.lit_limit +
         ") {\n        return -1;\n    }\n";
  s += "    return " + p.val + " * " + p.lit_mul + ";\n";
  s += "}";
  return s;
}

std::string render_416(const Params& p, bool vuln) {
  if (p.variant == 0) {
    std::string s = "int " + p.name + "(char *" + p.buf + ", int " + p.len + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.buf + " == 0", "0");
    if (vuln) {
      s += "    free(" + p.buf + ");\n";
      s += "    return " + p.buf + "[" + p.len + " - 1];\n";
    } else {
      s += "    int " + p.val + " = " + p.buf + "[" + p.len + " - 1];\n";
      s += "    free(" + p.buf + ");\n";
      s += "    return " + p.val + ";\n";
    }
    s += "}";
    return s;
  }
  std::string s = "int " + p.name + "(int *" + p.buf + ", int " + p.cnt + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.buf + " == 0", "0");
  s += "    int " + p.val + " = 0;\n";
  const std::string use =
      "    if (" + p.cnt + " > 0) {\n        " + p.val + " = " + p.buf + "[0];\n    }\n";
  if (vuln) {
    s += "    free(" + p.buf + ");\n";
    s += use;
  } else {
    s += use;
    s += "    free(" + p.buf + ");\n";
  }
  s += "    return " + p.val + ";\n";
  s += "}";
  return s;
}

std::string render_89(const Params& p, bool vuln) {
  if (p.variant == 0) {
    if (vuln) {
      std::string s = "int " + p.name + "(db_handle *db, const char *" + p.src + ") {\n";
      s += p.padding;
      s += decoy_guard(p, p.src + " == 0", "-1");
      s += "    char " + p.q + "[" + p.lit_cap + "];\n";
      s += "    sprintf(" + p.q + ", \"SELECT id FROM users WHERE name = '%s'\", " +
           p.src + ");\n";
      s += "    return db_exec(db, " + p.q + ");\n";
      s += "}";
      return s;
    }
    std::string s = "int " + p.name + "(db_handle *db, const char *" + p.src + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.src + " == 0", "-1");
    s += "    db_stmt *st = db_prepare(db, \"SELECT id FROM users WHERE name = ?\");\n";
    s += "    db_bind_text(st, 1, " + p.src + ");\n";
    s += "    return db_step(st);\n";
    s += "}";
    return s;
  }
  if (vuln) {
    std::string s = "int " + p.name + "(db_handle *db, const char *" + p.src + ", char *" +
                    p.q + ") {\n";
    s += p.padding;
    s += decoy_guard(p, p.src + " == 0", "-1");
    s += "    strcpy(" + p.q + ", \"DELETE FROM sessions WHERE token = '\");\n";
    s += "    strcat(" + p.q + ", " + p.src + ");\n";
    s += "    strcat(" + p.q + ", \"'\");\n";
    s += "    return db_exec(db, " + p.q + ");\n";
    s += "}";
    return s;
  }
  std::string s = "int " + p.name + "(db_handle *db, const char *" + p.src + ") {\n";
  s += p.padding;
  s += decoy_guard(p, p.src + " == 0", "-1");
  s += "    db_stmt *st = db_prepare(db, \"DELETE FROM sessions WHERE token = ?\");\n";
  s += "    db_bind_text(st, 1, " + p.src + ");\n";
  s += "    return db_step(st);\n";
  s += "}";
  return s;
}

std::string render_family(int family, const Params& p, bool vuln) {
  switch (family) {
    case 20: return render_20(p, vuln);
    case 89: return render_89(p, vuln);
    case 119: return render_119(p, vuln);
    case 125: return render_125(p, vuln);
    case 416: return render_416(p, vuln);
    case 787: return render_787(p, vuln);
  }
  fail("unknown synthetic CWE family: CWE-" + std::to_string(family));
}

std::string render_neutral(int kind, const Params& p) {
  switch (kind) {
    case 0: {
      std::string s = "int " + p.name + "(const int *" + p.buf + ", int " + p.len + ") {\n";
      s += p.padding;
      s += "    int i;\n";
      s += "    int " + p.val + " = 0;\n";
      s += "    for (i = 0; i < " + p.len + "; i++) {\n";
      s += "        " + p.val + " += " + p.buf + "[i];\n";
      s += "    }\n";
      s += "    return " + p.val + ";\n";
      s += "}";
      return s;
    }
    case 1: {
      std::string s = "int " + p.name + "(int " + p.val + ", int lo, int hi) {\n";
      s += p.padding;
      s += "    if (" + p.val + " < lo) {\n        return lo;\n    }\n";
      s += "    if (" + p.val + " > hi) {\n        return hi;\n    }\n";
      s += "    return " + p.val + ";\n";
      s += "}";
      return s;
    }
    case 2: {
      std::string s = "int " + p.name + "(const char *" + p.src + ", char c) {\n";
      s += p.padding;
      s += "    int i = 0;\n";
      s += "    if (" + p.src + " == 0) {\n        return -1;\n    }\n";
      s += "    while (" + p.src + "[i] != '\\0') {\n";
      s += "        if (" + p.src + "[i] == c) {\n            return i;\n        }\n";
      s += "        i++;\n";
      s += "    }\n";
      s += "    return -1;\n";
      s += "}";
      return s;
    }
    case 3: {
      std::string s = "void " + p.name + "(char *" + p.dst + ", const char *" + p.src +
                      ", int " + p.len + ") {\n";
      s += p.padding;
      s += "    if (" + p.len + " > " + p.lit_cap + ") {\n        " + p.len + " = " +
           p.lit_cap + ";\n    }\n";
      s += "    memcpy(" + p.dst + ", " + p.src + ", (size_t)" + p.len + ");\n";
      s += "}";
      return s;
    }
    case 4: {
      std::string s = "unsigned int " + p.name + "(const unsigned char *" + p.buf +
                      ", int " + p.len + ") {\n";
      s += p.padding;
      s += "    unsigned int h = " + p.lit_limit + "u;\n";
      s += "    int i;\n";
      s += "    for (i = 0; i < " + p.len + "; i++) {\n";
      s += "        h = h * 31u + " + p.buf + "[i];\n";
      s += "    }\n";
      s += "    return h;\n";
      s += "}";
      return s;
    }
    case 5: {
      std::string s = "void " + p.name + "(char **" + p.buf + ", int " + p.cnt + ") {\n";
      s += p.padding;
      s += "    int i;\n";
      s += "    for (i = 0; i < " + p.cnt + "; i++) {\n";
      s += "        free(" + p.buf + "[i]);\n";
      s += "        " + p.buf + "[i] = 0;\n";
      s += "    }\n";
      s += "}";
      return s;
    }
    case 6: {
      std::string s = "int " + p.name + "(const char *" + p.src + ") {\n";
      s += p.padding;
      s += "    int " + p.val + " = atoi(" + p.src + ");\n";
      s += "    if (" + p.val + " < 0) {\n        return 0;\n    }\n";
      s += "    if (" + p.val + " > " + p.lit_mul + ") {\n        return " + p.lit_mul +
           ";\n    }\n";
      s += "    return " + p.val + ";\n";
      s += "}";
      return s;
    }
    default: {
      std::string s = "int " + p.name + "(char *" + p.dst + ", int " + p.len +
                      ", const char *" + p.src + ") {\n";
      s += p.padding;
      s += "    return snprintf(" + p.dst + ", (size_t)" + p.len + ", \"%s-%d\", " +
           p.src + ", " + p.lit_small + ");\n";
      s += "}";
      return s;
    }
  }
}

std::int64_t paired_count(std::int64_t vulnerable, double fraction) {
  return static_cast<std::int64_t>(
      std::floor(static_cast<double>(vulnerable) * fraction));
}

}  // namespace

const std::vector<int>& synthetic_families() {
  static const std::vector<int> families = {20, 89, 119, 125, 416, 787};
  return families;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  const std::vector<int>& known = synthetic_families();
  for (const auto& [family, count] : spec.per_cwe) {
    if (std::find(known.begin(), known.end(), family) == known.end())
      fail("unknown synthetic CWE family: CWE-" + std::to_string(family) +
           " (known: 20, 89, 119, 125, 416, 787)");
    if (count < 0)
      fail("negative count for synthetic family CWE-" + std::to_string(family));
  }
  if (spec.non_vulnerable < 0) fail("negative non_vulnerable count");
  if (!(spec.pair_fraction >= 0.0 && spec.pair_fraction <= 1.0))
    fail("pair_fraction must be within [0, 1]");
  if (spec.source.empty()) fail("synthetic source tag must not be empty");

  std::int64_t paired_total = 0;
  for (const auto& [family, count] : spec.per_cwe)
    paired_total += paired_count(count, spec.pair_fraction);
  if (paired_total > spec.non_vulnerable)
    fail("pair_fraction demands " + std::to_string(paired_total) +
         " fixed counterparts but non_vulnerable is " +
         std::to_string(spec.non_vulnerable));

  Rng rng(derive_seed(spec.seed, "synth"));
  Corpus corpus;
  std::uint64_t instance = 0;
  std::int64_t next_id = 0;
  std::int64_t next_pair = 0;

  auto emit = [&](std::string code, Label label, std::vector<int> cwes,
                  std::string pair_id) {
    FunctionRecord r;
    r.id = spec.source + ":" + std::to_string(next_id++);
    r.code = std::move(code);
    r.label = label;
    r.cwes = std::move(cwes);
    r.source = spec.source;
    r.pair_id = std::move(pair_id);
    corpus.records.push_back(std::move(r));
  };

  struct PendingFixed {
    int family;
    Params params;
    std::string pair_id;
  };
  std::vector<PendingFixed> pending;

  for (const auto& [family, count] : spec.per_cwe) {
    const std::int64_t paired = paired_count(count, spec.pair_fraction);
    for (std::int64_t k = 0; k < count; ++k) {
      Params p = draw_params(rng, base_for(family, rng), instance++);
      std::string pair_id;
      if (k < paired) {
        pair_id = "pair:" + std::to_string(next_pair++);
        pending.push_back({family, p, pair_id});
      }
      emit(render_family(family, p, true), Label::vulnerable, {family}, pair_id);
    }
  }

  for (const auto& pf : pending)
    emit(render_family(pf.family, pf.params, false), Label::non_vulnerable, {},
         pf.pair_id);

  std::vector<int> families;
  for (const auto& [family, count] : spec.per_cwe)
    if (count > 0) families.push_back(family);
  for (std::int64_t k = paired_total; k < spec.non_vulnerable; ++k) {
    if (!families.empty() && rng.below(2) == 0) {
      const int family = families[rng.below(families.size())];
      Params p = draw_params(rng, base_for(family, rng), instance++);
      emit(render_family(family, p, false), Label::non_vulnerable, {}, "");
    } else {
      const int kind = static_cast<int>(rng.below(8));
      Params p = draw_params(rng, kNeutralBase[kind], instance++);
      emit(render_neutral(kind, p), Label::non_vulnerable, {}, "");
    }
  }

  corpus.provenance.push_back(
      {spec.source, "", static_cast<std::int64_t>(corpus.records.size())});
  return corpus;
}

}  // namespace vdlab
