#include "iotfuzz/mutate.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "iotfuzz/tplink.hpp"

namespace iotfuzz {

std::string to_string(MutationKind k) {
  switch (k) {
    case MutationKind::DictionarySubstitute: return "dictionary_substitute";
    case MutationKind::CharInsert: return "char_insert";
    case MutationKind::CharDelete: return "char_delete";
    case MutationKind::CharSubstitute: return "char_substitute";
    case MutationKind::CharSwap: return "char_swap";
    case MutationKind::DigitPerturb: return "digit_perturb";
    case MutationKind::CaseFlip: return "case_flip";
  }
  return "?";
}

bool is_structure_risk_field(const FieldId& field) {
  switch (field.name) {
    case FieldName::SpLeft:
    case FieldName::SpRight:
    case FieldName::Crlf:
    case FieldName::Version:
      return true;
    default:
      return false;
  }
}

namespace {

bool forbidden_char(const FieldId& field, char c) {
  if (field.name == FieldName::Crlf) return c == '\0';
  return c == '\r' || c == '\n' || c == '\0';
}

std::vector<size_t> digit_positions(const std::string& value) {
  std::vector<size_t> out;
  for (size_t i = 0; i < value.size(); ++i)
    if (std::isdigit(static_cast<unsigned char>(value[i]))) out.push_back(i);
  return out;
}

std::vector<size_t> alpha_positions(const std::string& value) {
  std::vector<size_t> out;
  for (size_t i = 0; i < value.size(); ++i)
    if (std::isalpha(static_cast<unsigned char>(value[i]))) out.push_back(i);
  return out;
}

// Printable ASCII for insert/substitute.
char random_char(Rng& rng) { return static_cast<char>('!' + rng.below('~' - '!' + 1)); }

}  // namespace

std::optional<std::string> mutate_field(const std::string& value, const MutationOp& op,
                                        const Dictionaries& dicts) {
  switch (op.kind) {
    case MutationKind::DictionarySubstitute: {
      const auto* dict = dicts.for_field(op.target);
      if (!dict || dict->empty()) return std::nullopt;
      return (*dict)[op.dict_index % dict->size()];
    }
    case MutationKind::CharInsert: {
      if (forbidden_char(op.target, op.replacement)) return std::nullopt;
      std::string out = value;
      out.insert(out.begin() + static_cast<long>(op.position % (out.size() + 1)), op.replacement);
      return out;
    }
    case MutationKind::CharDelete: {
      if (value.empty()) return std::nullopt;
      std::string out = value;
      out.erase(out.begin() + static_cast<long>(op.position % out.size()));
      return out;
    }
    case MutationKind::CharSubstitute: {
      if (value.empty() || forbidden_char(op.target, op.replacement)) return std::nullopt;
      std::string out = value;
      out[op.position % out.size()] = op.replacement;
      return out;
    }
    case MutationKind::CharSwap: {
      if (value.size() < 2) return std::nullopt;
      std::string out = value;
      size_t i = op.position % (out.size() - 1);
      std::swap(out[i], out[i + 1]);
      return out;
    }
    case MutationKind::DigitPerturb: {
      auto digits = digit_positions(value);
      if (digits.empty()) return std::nullopt;
      std::string out = value;
      size_t at = digits[op.position % digits.size()];
      int delta = op.delta % 10;
      if (delta == 0) delta = 1;
      out[at] = static_cast<char>('0' + ((out[at] - '0' + delta + 10) % 10));
      return out;
    }
    case MutationKind::CaseFlip: {
      auto alphas = alpha_positions(value);
      if (alphas.empty()) return std::nullopt;
      std::string out = value;
      size_t at = alphas[op.position % alphas.size()];
      unsigned char c = static_cast<unsigned char>(out[at]);
      out[at] = static_cast<char>(std::isupper(c) ? std::tolower(c) : std::toupper(c));
      return out;
    }
  }
  return std::nullopt;
}

std::optional<MutationOp> make_random_op(Rng& rng, const FieldId& field, const std::string& value,
                                         const Dictionaries& dicts) {
  std::vector<MutationKind> kinds;
  if (const auto* dict = dicts.for_field(field); dict && !dict->empty())
    kinds.push_back(MutationKind::DictionarySubstitute);
  kinds.push_back(MutationKind::CharInsert);
  if (!value.empty()) {
    kinds.push_back(MutationKind::CharDelete);
    kinds.push_back(MutationKind::CharSubstitute);
  }
  if (value.size() >= 2) kinds.push_back(MutationKind::CharSwap);
  if (!digit_positions(value).empty()) kinds.push_back(MutationKind::DigitPerturb);
  if (!alpha_positions(value).empty()) kinds.push_back(MutationKind::CaseFlip);
  if (kinds.empty()) return std::nullopt;

  MutationOp op;
  op.kind = kinds[rng.below(kinds.size())];
  op.target = field;
  op.position = static_cast<size_t>(rng.next());
  op.replacement = random_char(rng);
  op.delta = static_cast<int>(rng.below(9)) + 1;
  op.dict_index = static_cast<size_t>(rng.next());
  return op;
}

namespace {

struct BaseFields {
  RequestTemplate request;
  std::string frame_command;
};

class CampaignBuilder {
 public:
  CampaignBuilder(const SeedCorpus& corpus, const VulnerabilityDescriptor& vuln,
                  const Dictionaries& dicts)
      : corpus_(corpus), vuln_(vuln), dicts_(dicts) {}

  void check_required_seeds() const {
    auto has = [this](FieldName name) {
      return corpus_.first(FieldId{vuln_.protocol, name, {}}) != nullptr;
    };
    if (vuln_.protocol == Protocol::TplinkSmartHome) {
      if (!has(FieldName::FrameCommand))
        throw CampaignError("missing required seeds: no frame_command seed for " + vuln_.id);
      return;
    }
    if (!has(FieldName::Method) || !has(FieldName::UriPath))
      throw CampaignError("missing required seeds: need method and uri_path seeds for " + vuln_.id);
    for (const auto& name : vuln_.fixed_headers) {
      if (!corpus_.first(FieldId{vuln_.protocol, FieldName::HeaderValue, name}))
        throw CampaignError("missing required seeds: no header(" + name + ") seed for " + vuln_.id);
    }
  }

  // identity=true picks the first seed of every field (the sanity probe).
  BaseFields build_base(Rng& rng, bool identity) const {
    BaseFields base;
    auto pick = [&](FieldName name, const std::string& fallback,
                    const std::string& header = {}) -> std::string {
      auto values = corpus_.values(FieldId{vuln_.protocol, name, header});
      if (values.empty()) return fallback;
      return identity ? values.front() : values[rng.below(values.size())];
    };

    if (vuln_.protocol == Protocol::TplinkSmartHome) {
      base.frame_command = pick(FieldName::FrameCommand, {});
      return base;
    }

    RequestTemplate& t = base.request;
    t.protocol = vuln_.protocol;
    bool rtsp = vuln_.protocol == Protocol::Rtsp;
    t.method = pick(FieldName::Method, rtsp ? "OPTIONS" : "GET");
    t.sp_left = pick(FieldName::SpLeft, " ");
    t.uri_scheme = pick(FieldName::UriScheme, "");
    t.uri_netloc_port = t.uri_scheme.empty() ? "" : pick(FieldName::UriNetlocPort, "");
    t.uri_path = pick(FieldName::UriPath, "/");
    if (corpus_.first(FieldId{vuln_.protocol, FieldName::UriQuery, {}}))
      t.uri_query = pick(FieldName::UriQuery, "");
    t.sp_right = pick(FieldName::SpRight, " ");
    t.version = pick(FieldName::Version, rtsp ? "RTSP/1.0" : "HTTP/1.1");
    t.crlf = pick(FieldName::Crlf, "\r\n");

    if (!rtsp && corpus_.first(FieldId{vuln_.protocol, FieldName::HeaderValue, "Host"}))
      t.headers.emplace_back("Host", pick(FieldName::HeaderValue, {}, "Host"));
    for (const auto& name : vuln_.fixed_headers) {
      // Fixed headers always carry the first seed value, verbatim.
      const FieldSeed* seed = corpus_.first(FieldId{vuln_.protocol, FieldName::HeaderValue, name});
      t.headers.emplace_back(name, seed->value);
    }
    if (!rtsp && corpus_.first(FieldId{vuln_.protocol, FieldName::HeaderValue, "Accept"}))
      t.headers.emplace_back("Accept", pick(FieldName::HeaderValue, {}, "Accept"));
    if (rtsp && corpus_.first(FieldId{vuln_.protocol, FieldName::Cseq, {}}))
      t.headers.emplace_back("CSeq", pick(FieldName::Cseq, "1"));
    return base;
  }

  std::string* field_slot(BaseFields& base, const FieldId& field) const {
    RequestTemplate& t = base.request;
    switch (field.name) {
      case FieldName::Method: return &t.method;
      case FieldName::SpLeft: return &t.sp_left;
      case FieldName::UriScheme: return t.uri_scheme.empty() ? nullptr : &t.uri_scheme;
      case FieldName::UriNetlocPort:
        return t.uri_netloc_port.empty() ? nullptr : &t.uri_netloc_port;
      case FieldName::UriPath: return &t.uri_path;
      case FieldName::UriQuery: return t.uri_query ? &*t.uri_query : nullptr;
      case FieldName::SpRight: return &t.sp_right;
      case FieldName::Version: return &t.version;
      case FieldName::Crlf: return &t.crlf;
      case FieldName::Cseq: return t.find_header("CSeq");
      case FieldName::HeaderValue: return t.find_header(field.header_name);
      case FieldName::FrameCommand: return &base.frame_command;
      case FieldName::RequestUri:
      case FieldName::FrameLength:
        return nullptr;  // handled outside the per-field slot model
      default: return nullptr;
    }
  }

 private:
  const SeedCorpus& corpus_;
  const VulnerabilityDescriptor& vuln_;
  const Dictionaries& dicts_;
};

}  // namespace

std::string serialize_mutant(const MutantRequest& m, bool recompute_length) {
  if (m.protocol == Protocol::TplinkSmartHome) {
    (void)recompute_length;  // length mismatch is encoded in bytes directly
    return tplink_frame(m.frame_command);
  }
  return serialize(m.request);
}

std::vector<MutantRequest> generate_campaign(const SeedCorpus& corpus,
                                             const VulnerabilityDescriptor& vuln, int n,
                                             uint64_t rng_seed, const Dictionaries& dicts) {
  if (n < 1) throw CampaignError("campaign size must be >= 1");
  if (vuln.mode == VulnMode::Passive)
    throw CampaignError("descriptor " + vuln.id + " is passive; nothing to generate");

  CampaignBuilder builder(corpus, vuln, dicts);
  builder.check_required_seeds();

  Rng rng(rng_seed);
  std::vector<MutantRequest> out;
  std::unordered_set<std::string> seen;
  const int risk_cap = static_cast<int>(vuln.structure_risk_budget * n);
  int risk_used = 0;

  // Mutant 0: identity probe.
  {
    MutantRequest probe;
    probe.protocol = vuln.protocol;
    BaseFields base = builder.build_base(rng, /*identity=*/true);
    probe.request = std::move(base.request);
    probe.frame_command = std::move(base.frame_command);
    probe.mutant_id = 0;
    probe.bytes = serialize_mutant(probe);
    seen.insert(probe.bytes);
    out.push_back(std::move(probe));
  }

  const long budget = 10L * n;
  long attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > budget)
      throw CampaignError("retry budget exhausted for " + vuln.id + ": only " +
                          std::to_string(out.size()) + " of " + std::to_string(n) +
                          " distinct mutants achievable");

    BaseFields base = builder.build_base(rng, /*identity=*/false);
    MutantRequest mutant;
    mutant.protocol = vuln.protocol;

    bool allow_risk = risk_used < risk_cap;
    std::vector<FieldId> eligible;
    for (const auto& field : vuln.mutable_fields) {
      if (!allow_risk && is_structure_risk_field(field)) continue;
      if (builder.field_slot(base, field) != nullptr) eligible.push_back(field);
    }
    if (eligible.empty())
      throw CampaignError("no mutable field of " + vuln.id + " is present in the seed corpus");

    // 1-3 ops, geometric p=0.5.
    int op_count = 1;
    while (op_count < 3 && rng.coin()) ++op_count;

    bool applied_any = false;
    for (int i = 0; i < op_count; ++i) {
      // Inapplicable ops are retried with a fresh draw.
      for (int tries = 0; tries < 8; ++tries) {
        const FieldId& field = eligible[rng.below(eligible.size())];
        std::string* slot = builder.field_slot(base, field);
        auto op = make_random_op(rng, field, *slot, dicts);
        if (!op) continue;
        auto mutated = mutate_field(*slot, *op, dicts);
        if (!mutated) continue;
        *slot = std::move(*mutated);
        mutant.applied.push_back(*op);
        applied_any = true;
        break;
      }
    }
    if (!applied_any) continue;

    mutant.request = std::move(base.request);
    mutant.frame_command = std::move(base.frame_command);
    mutant.structure_risk =
        std::any_of(mutant.applied.begin(), mutant.applied.end(),
                    [](const MutationOp& op) { return is_structure_risk_field(op.target); });
    mutant.bytes = serialize_mutant(mutant);
    if (!seen.insert(mutant.bytes).second) continue;
    if (mutant.structure_risk) ++risk_used;
    mutant.mutant_id = static_cast<uint32_t>(out.size());
    out.push_back(std::move(mutant));
  }
  return out;
}

}  // namespace iotfuzz
