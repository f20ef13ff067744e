#include "rlvr/synthetic.hpp"

#include <random>
#include <set>

#include "rlvr/error.hpp"

namespace rlvr::synthetic {

namespace {

const std::vector<std::string>& cue_candidates() {
  static const std::vector<std::string> words = {
      "alpha",   "bravo",  "charlie", "delta",  "echo",    "foxtrot", "golf",   "hotel",
      "india",   "juliet", "kilo",    "lima",   "mike",    "november", "oscar", "papa",
      "quebec",  "romeo",  "sierra",  "tango",  "uniform", "victor",  "whiskey", "xray",
      "yankee",  "zulu",   "amber",   "cobalt", "crimson", "indigo",  "ivory",  "jade"};
  return words;
}

const std::vector<std::string>& filler_vocabulary() {
  static const std::vector<std::string> words = {
      "patient", "presents", "with",    "fever",   "cough",   "pain",    "acute",
      "chronic", "history",  "reports", "sudden",  "onset",   "mild",    "severe",
      "left",    "right",    "lower",   "upper",   "after",   "during",  "exam",
      "shows",   "normal",   "elevated", "reduced", "pulse",  "pressure", "rash",
      "fatigue", "weight",   "loss",    "gain",    "nausea",  "vomiting", "headache",
      "vision",  "blurred",  "swelling", "joint",  "stiffness", "morning", "night",
      "which",   "finding",  "best",    "explains", "likely", "diagnosis", "next",
      "step",    "management", "most",  "appropriate", "therapy", "test", "result"};
  return words;
}

std::set<std::size_t> reserved_buckets(std::size_t feature_dim) {
  std::set<std::size_t> out;
  for (std::size_t n = kMinOptions; n <= kMaxOptions; ++n) {
    out.insert(token_bucket("<options:" + std::to_string(n) + ">", feature_dim));
  }
  return out;
}

}  // namespace

std::vector<std::string> cue_words(std::size_t num_options, std::size_t feature_dim) {
  require(num_options >= kMinOptions && num_options <= kMaxOptions, ErrorKind::InvalidInput,
          "num_options outside [2, 10]");
  auto used = reserved_buckets(feature_dim);
  std::vector<std::string> cues;
  for (const auto& w : cue_candidates()) {
    if (cues.size() == num_options) break;
    if (used.insert(token_bucket(w, feature_dim)).second) cues.push_back(w);
  }
  require(cues.size() == num_options, ErrorKind::InvalidInput,
          "feature_dim too small for distinct cue buckets");
  return cues;
}

std::vector<MCQItem> make_task(const TaskOptions& opt) {
  const auto cues = cue_words(opt.num_options, opt.feature_dim);
  auto blocked = reserved_buckets(opt.feature_dim);
  for (const auto& c : cues) blocked.insert(token_bucket(c, opt.feature_dim));
  std::vector<std::string> fillers;
  for (const auto& w : filler_vocabulary()) {
    if (!blocked.count(token_bucket(w, opt.feature_dim))) fillers.push_back(w);
  }
  require(!fillers.empty(), ErrorKind::InvalidInput, "no usable filler words");

  std::mt19937_64 rng(opt.seed);
  std::vector<MCQItem> items;
  items.reserve(opt.n_items);
  for (std::size_t i = 0; i < opt.n_items; ++i) {
    MCQItem item;
    item.id = opt.id_prefix + "-" + std::to_string(i);
    const std::size_t gold = rng() % opt.num_options;
    std::string q;
    for (std::size_t w = 0; w < opt.filler_words; ++w) {
      q += fillers[rng() % fillers.size()];
      q += ' ';
    }
    q += cues[gold];
    item.question = q;
    for (std::size_t o = 0; o < opt.num_options; ++o) {
      item.options[option_letter(o)] = "choice " + cues[o];
    }
    item.gold = option_letter(gold);
    if (!opt.categories.empty()) item.category = opt.categories[i % opt.categories.size()];
    item.source = "synthetic";
    items.push_back(std::move(item));
  }
  return items;
}

Matrix oracle_weights(std::size_t num_options, std::size_t feature_dim, double strength) {
  const auto cues = cue_words(num_options, feature_dim);
  Matrix w(feature_dim, action_count_for(num_options));
  for (std::size_t o = 0; o < num_options; ++o) {
    w(token_bucket(cues[o], feature_dim), CompositeAction{o, FormatVariant::WellFormed}.id()) =
        strength;
  }
  return w;
}

}  // namespace rlvr::synthetic
