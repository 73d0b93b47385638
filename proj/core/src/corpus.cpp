#include "promptfx/corpus.hpp"

#include <algorithm>
#include <set>

#include "promptfx/errors.hpp"

namespace promptfx {

namespace {

using C = PromptCategory;

ChainPrompts make_chain(std::string chain, std::initializer_list<const char*> concrete,
                        std::initializer_list<const char*> abstract, std::initializer_list<const char*> combination,
                        std::initializer_list<const char*> imagery) {
  ChainPrompts out{std::move(chain), {}};
  auto add = [&](std::initializer_list<const char*> list, C c) {
    for (const char* t : list) out.prompts.push_back({t, c});
  };
  add(concrete, C::single_concrete);
  add(abstract, C::single_abstract);
  add(combination, C::multi_combination);
  add(imagery, C::multi_imagery);
  return out;
}

PromptCorpus build() {
  PromptCorpus corpus;
  corpus.version = "1";
  corpus.chains.push_back(make_chain(
      "eq", {"tinny", "muffled", "light", "deep", "crisp", "bright", "mellow"}, {"ethereal", "eerie", "grand"},
      {"soft yet vibrant", "in-your-face and bold", "shrill and sharp", "quiet and gentle", "cool and smooth"},
      {"coming through an old telephone", "coming from a speaker under a blanket", "booming like a thunderstorm",
       "delivered with a softer feel", "like a hazy surreal dream"}));
  corpus.chains.push_back(make_chain(
      "reverb", {"boomy", "spacious", "dry", "cavernous", "echoey", "underwater", "dry", "reverberant"},
      {"empty", "long", "bold"},
      {"booming and vast", "clear but distant", "cozy and enveloping", "heavy and dramatic",
       "hollow and far-away"},
      {"coming from a cathedral", "coming from a long hallway", "coming from a small and intimate sound booth",
       "like an explosion in a canyon", "accompanied by a faint atmospheric haze in the background"}));
  corpus.chains.push_back(make_chain(
      "eq-reverb", {"metallic", "harsh", "cold", "blaring", "bassy", "grainy", "breezy"},
      {"dramatic", "fluffy", "powerful"},
      {"barren and detached", "warm and full-bodied", "vibrant and powerful", "resonant and harmonious",
       "high and tinny"},
      {"coming from a small cavern with a muffled echo", "coming from underwater in a swimming pool",
       "coming from a broken speaker in an empty warehouse", "like a shrill Victorian ghost",
       "like a distant radio broadcast with a warm lingering presence"}));
  return corpus;
}

}  // namespace

std::string_view category_name(PromptCategory c) {
  switch (c) {
    case C::single_concrete: return "single_concrete";
    case C::single_abstract: return "single_abstract";
    case C::multi_combination: return "multi_combination";
    case C::multi_imagery: return "multi_imagery";
  }
  return "unknown";
}

std::vector<CorpusPrompt> ChainPrompts::with_category(PromptCategory c) const {
  std::vector<CorpusPrompt> out;
  std::copy_if(prompts.begin(), prompts.end(), std::back_inserter(out),
               [c](const CorpusPrompt& p) { return p.category == c; });
  return out;
}

std::vector<CorpusPrompt> ChainPrompts::unique() const {
  std::vector<CorpusPrompt> out;
  std::set<std::string> seen;
  for (const auto& p : prompts) {
    if (seen.insert(p.text).second) out.push_back(p);
  }
  return out;
}

const ChainPrompts& PromptCorpus::for_chain(std::string_view chain) const {
  for (const auto& c : chains) {
    if (c.chain == chain) return c;
  }
  throw InvalidArgument("no prompts for chain '" + std::string(chain) + "'");
}

std::size_t PromptCorpus::unique_count() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.unique().size();
  return n;
}

const PromptCorpus& load_prompt_corpus() {
  static const PromptCorpus corpus = build();
  return corpus;
}

}  // namespace promptfx
