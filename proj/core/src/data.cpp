#include "msem/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "msem/errors.hpp"

namespace msem {

namespace {

// Decode one UTF-8 codepoint starting at i; returns codepoint and advances i.
// Malformed bytes are passed through as latin-1 so bad input never throws.
uint32_t next_codepoint(const std::string& s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra = 0;
  uint32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  if (i + static_cast<size_t>(extra) >= s.size() + 1 || i + extra > s.size() - 0) {
    // fall through to bounds-checked loop below
  }
  size_t j = i + 1;
  for (int k = 0; k < extra; ++k, ++j) {
    if (j >= s.size() || (static_cast<unsigned char>(s[j]) & 0xC0) != 0x80) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (static_cast<unsigned char>(s[j]) & 0x3F);
  }
  i = j;
  return cp;
}

bool is_space_cp(uint32_t cp) {
  if (cp < 0x80) return std::isspace(static_cast<int>(cp)) != 0;
  return cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_punct_cp(uint32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<int>(cp)) != 0;
}

void append_cp(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  size_t i = 0;
  while (i < text.size()) {
    const uint32_t cp = next_codepoint(text, i);
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    } else if (is_punct_cp(cp)) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
      std::string p;
      append_cp(p, cp);
      tokens.push_back(std::move(p));
    } else {
      append_cp(cur, cp);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) throw DataError("tokenize: empty sentence");
  return tokens;
}

Vocab::Vocab() {
  tokens = {"<pad>", "<unk>"};
  index["<pad>"] = kPad;
  index["<unk>"] = kUnk;
}

void Vocab::add(const std::string& tok) {
  if (index.count(tok)) return;
  index[tok] = static_cast<int64_t>(tokens.size());
  tokens.push_back(tok);
}

std::vector<PairExample> load_pairs_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair file: " + path);
  std::vector<PairExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[2] != "0" && fields[2] != "1") {
      throw DataError(path + ":" + std::to_string(lineno) + ": label must be 0 or 1, got '" +
                      fields[2] + "'");
    }
    PairExample ex;
    ex.raw1 = fields[0];
    ex.raw2 = fields[1];
    try {
      ex.q1 = tokenize(fields[0]);
      ex.q2 = tokenize(fields[1]);
    } catch (const DataError&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty question");
    }
    ex.label = fields[2] == "1" ? 1 : 0;
    ex.line = lineno;
    out.push_back(std::move(ex));
  }
  return out;
}

Vocab build_vocab(const std::vector<PairExample>& examples, int min_count) {
  if (min_count < 1) throw ContractError("build_vocab: min_count must be >= 1");
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& ex : examples) {
    for (const auto& t : ex.q1) ++freq[t];
    for (const auto& t : ex.q2) ++freq[t];
  }
  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [tok, count] : freq)
    if (count >= min_count) kept.emplace_back(tok, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  for (const auto& [tok, count] : kept) v.add(tok);
  return v;
}

Vocab build_char_vocab(const std::vector<PairExample>& examples) {
  std::set<std::string> chars;
  auto collect = [&](const std::vector<std::string>& toks) {
    for (const auto& tok : toks) {
      size_t i = 0;
      while (i < tok.size()) {
        const size_t start = i;
        next_codepoint(tok, i);
        chars.insert(tok.substr(start, i - start));
      }
    }
  };
  for (const auto& ex : examples) {
    collect(ex.q1);
    collect(ex.q2);
  }
  Vocab v;
  for (const auto& c : chars) v.add(c);
  return v;
}

Tensor load_pretrained_embeddings(const std::string& path, const Vocab& vocab, int64_t dim,
                                  Rng& rng) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::unordered_map<std::string, std::vector<double>> file_rows;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    if (!vocab.index.count(tok)) continue;
    std::vector<double> row;
    double v;
    while (iss >> v) row.push_back(v);
    if (static_cast<int64_t>(row.size()) != dim) {
      throw DataError("embedding dimension mismatch for token '" + tok + "': expected " +
                      std::to_string(dim) + ", got " + std::to_string(row.size()));
    }
    file_rows[tok] = std::move(row);
  }
  Tensor table({vocab.size(), dim});
  for (int64_t i = 1; i < vocab.size(); ++i) {  // row 0 (PAD) stays zero
    auto it = file_rows.find(vocab.tokens[static_cast<size_t>(i)]);
    if (it != file_rows.end() && i != Vocab::kUnk) {
      for (int64_t j = 0; j < dim; ++j) table.at(i, j) = it->second[static_cast<size_t>(j)];
    } else {
      for (int64_t j = 0; j < dim; ++j) table.at(i, j) = rng.uniform(-0.05, 0.05);
    }
  }
  return table;
}

double overlap_rate(const std::vector<std::string>& q1, const std::vector<std::string>& q2) {
  if (q1.empty() || q2.empty()) throw DataError("overlap_rate: empty token sequence");
  const std::unordered_set<std::string> s1(q1.begin(), q1.end());
  const std::unordered_set<std::string> s2(q2.begin(), q2.end());
  int64_t common = 0;
  for (const auto& t : s1)
    if (s2.count(t)) ++common;
  const double avg_len = (static_cast<double>(q1.size()) + static_cast<double>(q2.size())) / 2.0;
  return static_cast<double>(common) / avg_len;
}

OverlapStats corpus_overlap_stats(const std::vector<PairExample>& examples) {
  OverlapStats s;
  double pos_sum = 0, neg_sum = 0;
  for (const auto& ex : examples) {
    const double r = overlap_rate(ex.q1, ex.q2);
    if (ex.label == 1) {
      pos_sum += r;
      ++s.n_pos;
    } else {
      neg_sum += r;
      ++s.n_neg;
    }
  }
  if (s.n_pos) s.positive = pos_sum / static_cast<double>(s.n_pos);
  if (s.n_neg) s.negative = neg_sum / static_cast<double>(s.n_neg);
  if (s.n_pos + s.n_neg) s.all = (pos_sum + neg_sum) / static_cast<double>(s.n_pos + s.n_neg);
  return s;
}

std::vector<FaqEntryRecord> load_faq_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open FAQ file: " + path);
  std::vector<FaqEntryRecord> out;
  std::unordered_set<uint64_t> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 3 tab-separated fields (id, question, answer)");
    }
    FaqEntryRecord rec;
    try {
      size_t pos = 0;
      rec.id = std::stoull(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad id '" + fields[0] + "'");
    }
    if (!seen.insert(rec.id).second) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id " + fields[0]);
    }
    if (fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty question");
    }
    rec.question = fields[1];
    rec.answer = fields[2];
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace msem
