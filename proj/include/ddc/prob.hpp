#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ddc/library.hpp"
#include "ddc/task.hpp"
#include "ddc/type.hpp"

namespace ddc {

// Sentinel parents for generation sites. A component's site is the primitive
// whose argument subtree it heads (lambdas are transparent), kRootParent at
// the program root, kVarParent under an applied bound variable.
inline constexpr const char* kRootParent = "<root>";
inline constexpr const char* kVarParent = "<var>";

// Where a component gets generated: parent component, argument position, and
// the requested type at the choice point (arrows already stripped).
struct BigramContext {
  std::string parent = kRootParent;
  int arg_index = 0;
  TypeRef requested;
};

std::string render_context(const BigramContext& c);

// One lambda binder in scope. Wrapper entries are the variables added by
// closing an open fragment; they are invisible to generation: never part of
// a choice support, and their occurrences cost nothing.
struct EnvEntry {
  TypeRef type;
  bool wrapper = false;
};

// Unnormalized log-weights per component; the actual distribution at a choice
// point renormalizes over the type-valid support.
class ProgramModel {
 public:
  virtual ~ProgramModel() = default;
  virtual double prim_logweight(const Task* task, const std::string& parent,
                                int arg_index, const std::string& name) const = 0;
  virtual double var_logweight(const Task* task, const std::string& parent,
                               int arg_index) const = 0;
};

// Unigram model over the library weights: conditions on nothing but the
// component itself (the task and site are ignored).
class GenerativeModel final : public ProgramModel {
 public:
  explicit GenerativeModel(const Library& lib)
      : theta_(lib.theta_map()), var_(lib.variable_weight()) {}

  double prim_logweight(const Task*, const std::string&, int,
                        const std::string& name) const override {
    return theta_.at(name);
  }
  double var_logweight(const Task*, const std::string&, int) const override {
    return var_;
  }

 private:
  std::map<std::string, double> theta_;
  double var_;
};

// Maps a task to a small feature-bucket id; buckets must be finite.
using FeatureFn = std::function<int(const Task&)>;

// Bigram recognition model: a real score per (task-feature-bucket, parent,
// arg-index, component), zero when unset. A default-constructed model is the
// uniform one.
class RecognitionModel final : public ProgramModel {
 public:
  RecognitionModel() = default;
  explicit RecognitionModel(FeatureFn features) : features_(std::move(features)) {}

  int bucket(const Task* task) const {
    return (task && features_) ? features_(*task) : 0;
  }

  double prim_logweight(const Task* task, const std::string& parent, int arg_index,
                        const std::string& name) const override;
  double var_logweight(const Task* task, const std::string& parent,
                       int arg_index) const override;

  void set_prim_score(int bucket, const std::string& parent, int arg_index,
                      const std::string& name, double score);
  void set_var_score(int bucket, const std::string& parent, int arg_index,
                     double score);

  struct Row {
    int bucket;
    std::string parent;
    int arg_index;
    std::string component;  // primitive name, or kVarParent for the variable score
    double score;
  };
  std::vector<Row> rows() const;  // deterministic order for dumps

  const FeatureFn& features() const { return features_; }

 private:
  using SiteKey = std::tuple<int, std::string, int>;
  std::map<SiteKey, std::map<std::string, double>> prim_scores_;
  std::map<SiteKey, double> var_scores_;
  FeatureFn features_;
};

// A type-valid component at a choice point, with the unification state that
// committing to it produces.
struct ChoiceOption {
  bool is_var = false;
  int var_index = -1;              // de Bruijn index when is_var
  const Primitive* prim = nullptr;  // when !is_var
  std::vector<TypeRef> arg_types;   // requests for the arguments, under ctx_after
  TypeContext ctx_after;
  double log_weight = 0.0;
  double log_mass = 0.0;  // normalized over the returned support
};

// The normalized distribution over type-valid components (primitives whose
// return type unifies with `request`, plus in-scope non-wrapper variables).
// `request` must not be an arrow: generation handles arrows by inserting
// lambdas deterministically. An empty result signals an empty support.
std::vector<ChoiceOption> choice_options(const Library& lib, const ProgramModel& model,
                                         const Task* task, const TypeContext& K,
                                         const std::vector<EnvEntry>& env,
                                         const TypeRef& request,
                                         const std::string& parent, int arg_index);

// Observation hook for the likelihood walker: called once per choice point.
using ChoiceHook = std::function<void(
    const BigramContext& ctx, const std::vector<ChoiceOption>& support, size_t chosen)>;

// Log-probability of generating `e` at `requested`: the sum of the chosen
// components' log-masses along the deterministic left-to-right derivation.
// nullopt when e is not generatable (component outside its support, not
// eta-long, beta-redex, arity mismatch); distinct from a very low value.
std::optional<double> program_logprob(const Library& lib, const ProgramModel& model,
                                      const Task* task, const ExprRef& e,
                                      const TypeRef& requested,
                                      const ChoiceHook& hook = nullptr);

// Empirical distribution over the generation sites occupied by components in
// a program corpus; the expectation in probability-as-part is taken under it.
struct ContextPrior {
  enum class Provenance { Pooled, PerTask, UniformFallback };
  struct Entry {
    BigramContext ctx;
    double prob;
  };
  std::vector<Entry> entries;  // sorted by rendered context
  Provenance provenance = Provenance::UniformFallback;
};

ContextPrior estimate_context_prior(
    const Library& lib, const std::vector<std::pair<ExprRef, TypeRef>>& programs);
// Uniform over every argument slot of every library primitive.
ContextPrior uniform_fallback_prior(const Library& lib);

// Log-probability that the closed fragment `closed` (with `arity` wrapper
// lambdas) is generated as part of some program solving `task`: the root
// component's probability at a prior-sampled site times the probability of
// the fragment's remaining own components, averaged over the prior. Wrapper
// variables are ignored throughout. -inf when the root is valid nowhere.
double function_logprob_as_part(const Library& lib, const ProgramModel& model,
                                const Task* task, const ExprRef& closed, int arity,
                                const ContextPrior& prior);

struct FitOptions {
  int max_iters = 500;
  double tol = 1e-6;  // stop when the objective improves less than this
  double l2 = 1e-5;
};

// Fit a recognition model from scratch by gradient ascent on the weighted
// log-likelihood of the training programs. Replays and fantasies each carry
// half the total weight regardless of their counts; if one side is empty the
// other carries all of it. The objective never decreases across iterations.
RecognitionModel fit_recognition(const Library& lib,
                                 const std::vector<std::pair<ExprRef, const Task*>>& replays,
                                 const std::vector<std::pair<ExprRef, const Task*>>& fantasies,
                                 FeatureFn features, const FitOptions& opts = {});

// Sample a program top-down from the unigram model. Dead ends (empty support
// or depth past `depth_cap` component levels) yield nullopt.
std::optional<TypedProgram> sample_program(const Library& lib, const GenerativeModel& gen,
                                           const TypeRef& requested, std::mt19937_64& rng,
                                           int depth_cap = 8);

double log_sum_exp(const std::vector<double>& xs);

}  // namespace ddc
