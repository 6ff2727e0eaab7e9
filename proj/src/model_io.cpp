#include "morsel/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "morsel/errors.hpp"

namespace morsel {

std::string_view model_kind_name(ModelKind kind) {
  return kind == ModelKind::Hierarchical ? "hier" : "flat";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  if (name == "hier") return ModelKind::Hierarchical;
  if (name == "flat") return ModelKind::Flat;
  return std::nullopt;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, const char* what) {
  char* end = nullptr;
  std::string tmp(s);
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw DataError(std::string("model file: bad ") + what + " value '" + tmp + "'");
  return v;
}

long long parse_int(std::string_view s, const char* what) {
  std::string tmp(s);
  char* end = nullptr;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw DataError(std::string("model file: bad ") + what + " value '" + tmp + "'");
  return v;
}

bool parse_flag(std::string_view s, const char* what) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw DataError(std::string("model file: bad ") + what + " flag '" + std::string(s) + "'");
}

// "key=value" tokens separated by single spaces.
std::vector<std::pair<std::string, std::string>> parse_kv(std::string_view s) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t space = s.find(' ', pos);
    std::string_view tok = s.substr(pos, space == std::string_view::npos ? space : space - pos);
    std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw DataError("model file: expected key=value, found '" + std::string(tok) + "'");
    out.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    if (space == std::string_view::npos) break;
    pos = space + 1;
  }
  return out;
}

}  // namespace

std::string serialize_model(const SavedModel& model) {
  const ModelParameters& p = model.params;
  std::ostringstream out;
  out << "# morsel model\n";
  out << "# kind: " << model_kind_name(model.kind) << "\n";
  out << "# alphabet: " << p.alphabet.symbols() << "\n";
  out << "# insertion-budget: " << p.insertion_budget << "\n";
  out << "# components: omega=p: eta=t: psi=s:\n";
  const TransducerFeatureConfig& t = p.transducer_features;
  out << "# transducer: radius=" << t.context_radius << " identity=" << t.action_identity
      << " context=" << t.action_context << " previous=" << t.action_previous_output
      << " insert=" << t.allow_insert << " delete=" << t.allow_delete << "\n";
  const ParserFeatureConfig& pf = p.parser_features;
  out << "# parser: span-segment=" << pf.span_segment << " lexicon=" << pf.lexicon_membership
      << " segment-label=" << pf.segment_label << " production=" << pf.production
      << " backoff=" << pf.production_backoff << "\n";
  const ChainFeatureConfig& c = p.chain_features;
  out << "# chain: segment=" << c.segment << " lexicon=" << c.lexicon_membership
      << " length=" << c.length_bucket << " bigram=" << c.boundary_bigram << "\n";
  out << "# lambda: " << fmt_double(model.lambda) << "\n";
  out << "# dev-metric: " << model.dev_metric << "\n";
  out << "# dev-score: " << fmt_double(model.dev_score) << "\n";
  out << "# seed: " << model.seed << "\n";
  for (const std::string& word : p.lexicon.sorted_words()) out << "# lexicon: " << word << "\n";
  for (const auto& [feature, weight] : p.weights.sorted_entries())
    out << feature << "\t" << fmt_double(weight) << "\n";
  return out.str();
}

SavedModel deserialize_model(std::string_view text) {
  SavedModel model;
  bool seen_magic = false;
  bool alphabet_set = false;
  std::size_t pos = 0;
  int line_number = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (line[0] == '#') {
      std::string_view body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.remove_prefix(1);
      if (body == "morsel model") {
        seen_magic = true;
        continue;
      }
      std::size_t colon = body.find(": ");
      if (colon == std::string_view::npos)
        throw DataError("model file line " + std::to_string(line_number) +
                        ": malformed header line");
      std::string_view key = body.substr(0, colon);
      std::string_view value = body.substr(colon + 2);
      if (key == "kind") {
        auto kind = model_kind_from_name(value);
        if (!kind)
          throw DataError("model file: unknown kind '" + std::string(value) + "'");
        model.kind = *kind;
      } else if (key == "alphabet") {
        model.params.alphabet = Alphabet(value);
        alphabet_set = true;
      } else if (key == "insertion-budget") {
        model.params.insertion_budget = static_cast<int>(parse_int(value, "insertion-budget"));
      } else if (key == "components") {
        if (value != "omega=p: eta=t: psi=s:")
          throw DataError("model file: unsupported component map '" + std::string(value) + "'");
      } else if (key == "transducer") {
        TransducerFeatureConfig& t = model.params.transducer_features;
        for (const auto& [k, v] : parse_kv(value)) {
          if (k == "radius") t.context_radius = static_cast<int>(parse_int(v, "radius"));
          else if (k == "identity") t.action_identity = parse_flag(v, "identity");
          else if (k == "context") t.action_context = parse_flag(v, "context");
          else if (k == "previous") t.action_previous_output = parse_flag(v, "previous");
          else if (k == "insert") t.allow_insert = parse_flag(v, "insert");
          else if (k == "delete") t.allow_delete = parse_flag(v, "delete");
          else throw DataError("model file: unknown transducer option '" + k + "'");
        }
      } else if (key == "parser") {
        ParserFeatureConfig& f = model.params.parser_features;
        for (const auto& [k, v] : parse_kv(value)) {
          if (k == "span-segment") f.span_segment = parse_flag(v, "span-segment");
          else if (k == "lexicon") f.lexicon_membership = parse_flag(v, "lexicon");
          else if (k == "segment-label") f.segment_label = parse_flag(v, "segment-label");
          else if (k == "production") f.production = parse_flag(v, "production");
          else if (k == "backoff") f.production_backoff = parse_flag(v, "backoff");
          else throw DataError("model file: unknown parser option '" + k + "'");
        }
      } else if (key == "chain") {
        ChainFeatureConfig& f = model.params.chain_features;
        for (const auto& [k, v] : parse_kv(value)) {
          if (k == "segment") f.segment = parse_flag(v, "segment");
          else if (k == "lexicon") f.lexicon_membership = parse_flag(v, "lexicon");
          else if (k == "length") f.length_bucket = parse_flag(v, "length");
          else if (k == "bigram") f.boundary_bigram = parse_flag(v, "bigram");
          else throw DataError("model file: unknown chain option '" + k + "'");
        }
      } else if (key == "lambda") {
        model.lambda = parse_double(value, "lambda");
      } else if (key == "dev-metric") {
        model.dev_metric = std::string(value);
      } else if (key == "dev-score") {
        model.dev_score = parse_double(value, "dev-score");
      } else if (key == "seed") {
        model.seed = static_cast<std::uint64_t>(parse_int(value, "seed"));
      } else if (key == "lexicon") {
        model.params.lexicon.insert(value);
      } else {
        throw DataError("model file: unknown header key '" + std::string(key) + "'");
      }
      continue;
    }
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw DataError("model file line " + std::to_string(line_number) +
                      ": expected 'feature<TAB>weight'");
    std::string_view feature = line.substr(0, tab);
    if (feature.empty())
      throw DataError("model file line " + std::to_string(line_number) + ": empty feature");
    model.params.weights.set(std::string(feature), parse_double(line.substr(tab + 1), "weight"));
  }
  if (!seen_magic) throw DataError("model file: missing '# morsel model' header");
  if (!alphabet_set) throw DataError("model file: missing alphabet header");
  return model;
}

void save_model(const std::string& path, const SavedModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize_model(model);
  if (!out) throw DataError("failed while writing model file: " + path);
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace morsel
