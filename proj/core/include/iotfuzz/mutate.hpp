#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iotfuzz/codec.hpp"
#include "iotfuzz/registry.hpp"
#include "iotfuzz/seeds.hpp"

namespace iotfuzz {

// Campaign RNG. mt19937_64 has a standard-defined output sequence; all
// reductions use raw 64-bit draws so campaigns replay bit-identically on
// any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  uint64_t next() { return eng_(); }
  size_t below(size_t n) { return static_cast<size_t>(next() % n); }
  bool coin() { return (next() & 1) != 0; }

 private:
  std::mt19937_64 eng_;
};

enum class MutationKind {
  DictionarySubstitute,
  CharInsert,
  CharDelete,
  CharSubstitute,
  CharSwap,
  DigitPerturb,
  CaseFlip,
};

std::string to_string(MutationKind k);

struct MutationOp {
  MutationKind kind = MutationKind::CharSubstitute;
  FieldId target;
  size_t position = 0;
  char replacement = 0;   // CharInsert / CharSubstitute
  int delta = 0;          // DigitPerturb
  size_t dict_index = 0;  // DictionarySubstitute
};

// Applies one op to a field value. nullopt when inapplicable (delete on an
// empty value, digit perturb with no digit run, ...); the caller retries
// with another op. Char ops never introduce CR/LF/NUL outside crlf fields.
std::optional<std::string> mutate_field(const std::string& value, const MutationOp& op,
                                        const Dictionaries& dicts);

// Crafts a random applicable op for the field, or nullopt if none applies.
std::optional<MutationOp> make_random_op(Rng& rng, const FieldId& field,
                                         const std::string& value, const Dictionaries& dicts);

bool is_structure_risk_field(const FieldId& field);

struct MutantRequest {
  Protocol protocol = Protocol::Http;
  RequestTemplate request;    // HTTP / RTSP
  std::string frame_command;  // TP-Link cipher bytes
  std::vector<MutationOp> applied;
  uint32_t mutant_id = 0;
  bool structure_risk = false;
  std::string bytes;  // serialized wire form
};

std::string serialize_mutant(const MutantRequest& m, bool recompute_length = true);

struct CampaignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic for fixed (corpus, descriptor, n, rng_seed, dicts): exactly
// n pairwise-distinct serializations, retry budget 10*n. Mutant 0 is the
// identity probe built from the first seed of every field.
std::vector<MutantRequest> generate_campaign(const SeedCorpus& corpus,
                                             const VulnerabilityDescriptor& vuln, int n,
                                             uint64_t rng_seed, const Dictionaries& dicts);

}  // namespace iotfuzz
