#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promptfx {

enum class PromptCategory { single_concrete, single_abstract, multi_combination, multi_imagery };

std::string_view category_name(PromptCategory c);

struct CorpusPrompt {
  std::string text;
  PromptCategory category;
};

struct ChainPrompts {
  std::string chain;  // "eq", "reverb" or "eq-reverb"
  std::vector<CorpusPrompt> prompts;  // as printed, in table order

  /// Entries with a given tag, as printed.
  std::vector<CorpusPrompt> with_category(PromptCategory c) const;
  /// Drops repeated texts within the chain, keeping first occurrences.
  std::vector<CorpusPrompt> unique() const;
};

struct PromptCorpus {
  std::string version;
  std::vector<ChainPrompts> chains;

  const ChainPrompts& for_chain(std::string_view chain) const;
  /// Number of distinct prompts across all chains (per-chain dedup, then summed).
  std::size_t unique_count() const;
};

/// The listening-study prompt table, embedded. The reverb single-word row is
/// kept exactly as published: it repeats "dry", so that chain holds 21 printed
/// entries and 20 distinct ones.
const PromptCorpus& load_prompt_corpus();

}  // namespace promptfx
