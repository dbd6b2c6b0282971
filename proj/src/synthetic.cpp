#include "trialsize/synthetic.hpp"

#include <array>
#include <map>
#include <span>

#include "trialsize/random.hpp"

namespace trialsize {
namespace {

constexpr std::array<std::string_view, 10> kPopulations{
    "patients", "participants", "subjects", "adults",  "women",
    "men",      "children",     "volunteers", "outpatients", "adolescents"};
constexpr std::array<std::string_view, 12> kConditions{
    "type 2 diabetes", "chronic heart failure", "major depression", "asthma",
    "hypertension",    "rheumatoid arthritis",  "chronic pain",     "obesity",
    "acute stroke",    "osteoporosis",          "migraine",         "tuberculosis"};
constexpr std::array<std::string_view, 12> kDrugs{
    "metformin", "rosiglitazone", "placebo",    "aspirin",  "sertraline", "atorvastatin",
    "insulin",   "ibuprofen",     "prednisone", "lisinopril", "vitamin D", "isoniazid"};
constexpr std::array<std::string_view, 6> kOutcomes{
    "HbA1c", "systolic blood pressure", "pain score", "body weight", "symptom score",
    "bone density"};

constexpr std::array<std::string_view, 20> kOnes{
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 10> kTensWords{
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

std::string spell_below_hundred(int n) {
  if (n < 20) return std::string(kOnes[static_cast<std::size_t>(n)]);
  std::string s(kTensWords[static_cast<std::size_t>(n / 10)]);
  if (n % 10) s += "-" + std::string(kOnes[static_cast<std::size_t>(n % 10)]);
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

class Writer {
 public:
  explicit Writer(std::uint64_t seed) : rng_(seed) {}

  int between(int lo, int hi) {
    return lo + static_cast<int>(rng_.below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool chance(double p) { return rng_.uniform() < p; }
  template <std::size_t N>
  std::string pick(const std::array<std::string_view, N>& items) {
    return std::string(items[static_cast<std::size_t>(rng_.below(N))]);
  }
  std::string pick(std::initializer_list<std::string_view> items) {
    const auto i = static_cast<std::size_t>(rng_.below(items.size()));
    return std::string(*(items.begin() + static_cast<std::ptrdiff_t>(i)));
  }

  int pick_int(std::initializer_list<int> items) {
    return *(items.begin() + static_cast<std::ptrdiff_t>(rng_.below(items.size())));
  }

  // Plausible non-size integers that are never equal to `avoid`.
  int distractor(int lo, int hi, int avoid) {
    int v = between(lo, hi);
    while (v == avoid) v = between(lo, hi);
    return v;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

std::string n(int v) { return std::to_string(v); }

struct Plan {
  int size = 0;
  std::string pop;
  std::string cond;
  std::string drug;
  std::string comparator;
  std::string outcome;
  int weeks = 0;
  int year1 = 0;
  int year2 = 0;
};

std::string size_sentence(Writer& w, const Plan& p, bool& arm_only) {
  const std::string N = n(p.size);
  if (arm_only) {
    const int a = p.size / 2 + w.between(-5, 5);
    const int b = p.size - a;
    return capitalize(p.pop) + " with " + p.cond + " were randomized to " + n(p.weeks) +
           " weeks' treatment with either " + p.drug + " (n = " + n(a) + ") or " + p.comparator +
           " (n = " + n(b) + ").";
  }
  // Over half of the size sentences mention another number first.
  const int form = w.chance(0.55) ? w.pick_int({3, 6, 9, 10, 11, 12}) : w.between(0, 8);
  switch (form) {
    case 9:
      return "From " + n(w.distractor(10, 80, p.size)) + " outpatient clinics, we recruited " +
             N + " " + p.pop + " with " + p.cond + ".";
    case 10:
      return "After a " + n(w.distractor(10, 28, p.size)) + "-day run-in, " + N + " " + p.pop +
             " were randomly assigned to " + p.drug + " or " + p.comparator + ".";
    case 11:
      return "Of " + n(p.size + w.between(10, 200)) + " " + p.pop + " screened, " + N +
             " were randomized to " + p.drug + " or " + p.comparator + ".";
    case 12:
      return "In " + n(w.distractor(10, 40, p.size)) + " centres across " +
             n(w.distractor(10, 20, p.size)) + " regions, " + N + " " + p.pop +
             " with " + p.cond + " took part.";
    case 0:
      return "A total of " + N + " " + p.pop + " with " + p.cond +
             " were randomized to " + p.drug + " or " + p.comparator + ".";
    case 1:
      return "Between " + n(p.year1) + " and " + n(p.year2) + ", " + N + " " + p.pop + " from " +
             n(w.distractor(10, 90, p.size)) + " hospitals in " + n(w.distractor(10, 30, p.size)) +
             " countries were enrolled.";
    case 2:
      return "We randomly assigned " + N + " " + p.pop + " with " + p.cond + " to receive " +
             p.drug + " or " + p.comparator + " for " + n(p.weeks) + " weeks.";
    case 3:
      return "At " + n(w.distractor(10, 60, p.size)) + " centres in " +
             n(w.distractor(10, 25, p.size)) + " countries, " + N + " " + p.pop +
             " were randomly allocated to " + p.drug + " or " + p.comparator + ".";
    case 4:
      return "In this trial, " + N + " " + p.pop + " aged " + n(w.distractor(18, 40, p.size)) +
             " to " + n(w.distractor(60, 85, p.size)) + " years were randomized.";
    case 5:
      if (p.size < 100)
        return capitalize(spell_below_hundred(p.size)) + " " + p.pop + " with " + p.cond +
               " were enrolled and randomly assigned to " + p.drug + " or " + p.comparator + ".";
      [[fallthrough]];
    case 6:
      return "Over " + n(w.distractor(12, 36, p.size)) + " months, " + N + " " + p.pop +
             " with " + p.cond + " were enrolled at " + n(w.distractor(10, 40, p.size)) +
             " sites.";
    case 7:
      return "The trial enrolled " + N + " " + p.pop + " (mean age " +
             n(w.distractor(35, 75, p.size)) + " years) between " + n(p.year1) + " and " +
             n(p.year2) + ".";
    default:
      return capitalize(p.pop) + " (n = " + N + ") with " + p.cond +
             " were randomly assigned to " + p.drug + " or " + p.comparator + ".";
  }
}

std::string methods_extra(Writer& w, const Plan& p) {
  switch (w.between(0, 5)) {
    case 0:
      return "The " + p.drug + " dose was " + n(w.distractor(10, 500, p.size)) + " mg daily for " +
             n(p.weeks) + " weeks.";
    case 1:
      return "Follow-up lasted " + n(w.distractor(12, 48, p.size)) + " months.";
    case 2:
      return "The primary outcome was the change in " + p.outcome + " at " +
             n(w.distractor(14, 90, p.size)) + " days.";
    case 3:
      return "Recruitment took place between " + n(p.year1) + " and " + n(p.year2) + ".";
    case 4:
      return "Randomization was stratified by centre and by age above or below " +
             n(w.distractor(40, 70, p.size)) + " years.";
    default:
      return "Assessments were performed every " + n(w.distractor(10, 16, p.size)) +
             " weeks by blinded assessors.";
  }
}

std::string results_sentence(Writer& w, const Plan& p) {
  const int completed = std::max(10, p.size - w.between(1, std::max(2, p.size / 5)));
  switch (w.between(0, 5)) {
    case 0:
      return "Of the " + n(p.size) + " " + p.pop + " randomized, " + n(completed) +
             " completed the study.";
    case 1:
      return "After " + n(p.weeks) + " weeks, mean " + p.outcome + " decreased from " +
             n(w.distractor(110, 180, p.size)) + " to " + n(w.distractor(100, 170, p.size)) +
             " in the " + p.drug + " group.";
    case 2:
      return n(w.distractor(10, std::max(12, p.size / 4), p.size)) + " " + p.pop +
             " withdrew because of adverse events.";
    case 3:
      return "The response rate was " + n(w.distractor(20, 80, p.size)) + " percent with " +
             p.drug + " and " + n(w.distractor(10, 60, p.size)) + " percent with " +
             p.comparator + ".";
    case 4:
      return "Serious adverse events occurred in " + n(w.distractor(10, 40, p.size)) +
             " cases during " + n(w.distractor(12, 52, p.size)) + " weeks of treatment.";
    default:
      return "The difference in " + p.outcome + " was significant at " + n(p.weeks) +
             " weeks (p < 0.01).";
  }
}

}  // namespace

std::vector<Abstract> generate_synthetic_corpus(const SyntheticOptions& options) {
  Writer w(options.seed);
  std::vector<Abstract> out;
  out.reserve(options.abstracts);
  for (std::size_t i = 0; i < options.abstracts; ++i) {
    Plan p;
    p.size = w.chance(0.2) ? w.between(20, 99) : w.chance(0.7) ? w.between(100, 999)
                                                                : w.between(1000, 4000);
    p.pop = w.pick(kPopulations);
    p.cond = w.pick(kConditions);
    p.drug = w.pick(kDrugs);
    do p.comparator = w.pick(kDrugs); while (p.comparator == p.drug);
    p.outcome = w.pick(kOutcomes);
    p.weeks = w.distractor(12, 52, p.size);
    p.year1 = w.between(1990, 2010);
    p.year2 = p.year1 + w.between(1, 6);
    bool arm_only = w.chance(options.arm_only_rate);

    std::vector<std::string> background{
        capitalize(p.cond) + " affects " + n(w.distractor(10, 90, p.size)) + " percent of older " + p.pop +
            " in some regions.",
        "Treatment options for " + p.cond + " remain limited."};
    if (w.chance(0.5))
      background.push_back("Guidelines published in " + n(w.distractor(1995, 2014, p.size)) +
                           " recommend " + p.drug + " as first-line therapy.");
    std::vector<std::string> objective{"To assess whether " + p.drug + " improves " + p.outcome +
                                       " compared with " + p.comparator + "."};
    std::vector<std::string> methods;
    if (w.chance(0.5)) methods.push_back(methods_extra(w, p));
    methods.push_back(size_sentence(w, p, arm_only));
    methods.push_back(methods_extra(w, p));
    if (w.chance(0.5)) methods.push_back(methods_extra(w, p));
    std::vector<std::string> results{results_sentence(w, p), results_sentence(w, p)};
    std::vector<std::string> conclusions{capitalize(p.drug) + " was " +
                                         w.pick({"more effective than", "not superior to",
                                                 "as effective as"}) +
                                         " " + p.comparator + " in " + p.pop + " with " + p.cond +
                                         "."};

    auto join = [](const std::vector<std::string>& parts) {
      std::string s;
      for (const auto& x : parts) s += (s.empty() ? "" : " ") + x;
      return s;
    };
    std::vector<SectionInput> sections;
    if (w.chance(options.unstructured_rate)) {
      sections.push_back({std::nullopt, std::nullopt,
                          join(background) + " " + join(objective) + " " + join(methods) + " " +
                              join(results) + " " + join(conclusions)});
    } else {
      sections.push_back({"BACKGROUND", w.pick({"Background", "Introduction", "Context"}),
                          join(background)});
      sections.push_back({"OBJECTIVE", w.pick({"Objective", "Aims", "Purpose"}), join(objective)});
      sections.push_back({"METHODS",
                          w.pick({"Methods", "Patients and methods", "Materials and methods",
                                  "Design, setting and participants", "Study design"}),
                          join(methods)});
      sections.push_back({"RESULTS", w.pick({"Results", "Findings"}), join(results)});
      sections.push_back({"CONCLUSIONS", w.pick({"Conclusions", "Conclusion", "Interpretation"}),
                          join(conclusions)});
    }
    out.push_back(build_abstract(options.id_prefix + "-" + std::to_string(i), sections, p.size));
  }
  return out;
}

}  // namespace trialsize
