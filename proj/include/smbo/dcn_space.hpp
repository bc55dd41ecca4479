#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smbo/evaluators.hpp"
#include "smbo/search_space.hpp"

namespace smbo::dcn {

/// Domains of the architecture hyper-parameters. The defaults are wide enough
/// to express every layer of the reference nets used in the tests.
struct RangeProfile {
  std::string name = "dcn";
  std::int64_t version = 1;

  std::int64_t min_conv_layers = 2;
  std::int64_t max_conv_layers = 8;
  std::vector<std::int64_t> filters{32, 64, 128, 256};
  std::vector<std::int64_t> filter_sizes{3, 5, 7, 11};
  std::int64_t min_stride = 1;
  std::int64_t max_stride = 10;
  /// Padding is drawn as a fraction f of the filter size: pad = floor(f * k),
  /// capped at k - 1.
  double min_pad_fraction = 0.0;
  double max_pad_fraction = 1.0;

  std::vector<bool> norm_options{false, true};
  std::vector<std::int64_t> norm_sizes{3, 5, 9};
  std::vector<bool> pool_options{false, true};
  std::vector<std::int64_t> pool_sizes{2, 3};
  std::vector<std::int64_t> pool_strides{1, 2};
  std::vector<std::string> pool_types{"max", "avg"};
  std::vector<bool> aux_options{false, true};

  std::int64_t min_hidden = 0;
  std::int64_t max_hidden = 2;
  std::int64_t min_nodes = 256;
  std::int64_t max_nodes = 5120;
  std::vector<bool> dropout_options{false, true};
  std::vector<double> dropout_rates{0.5};

  /// Every domain pinned to a single value.
  static RangeProfile minimal();

  /// The profile written as a space-definition document with
  /// "kind": "dcn-profile"; one param per range (num_conv_layers, filters,
  /// filter_size, stride, pad_fraction, norm, norm_size, pool, pool_size,
  /// pool_stride, pool_type, aux, num_hidden, hidden_nodes, dropout,
  /// dropout_rate). Absent params keep their defaults.
  nlohmann::json to_json() const;
  static RangeProfile from_json(const nlohmann::json& j);
};

/// True if `j` is a profile document rather than a plain space definition.
bool is_profile_document(const nlohmann::json& j);

/// Loads a space file. Profile documents are expanded with build_space.
SearchSpace load_space_file(const std::string& path, std::optional<RangeProfile>* profile = nullptr);

/// Expands a profile into the conditional per-layer space. Layer l's params
/// (conv{l}_filters, conv{l}_size, conv{l}_stride, conv{l}_pad, conv{l}_norm,
/// conv{l}_pool, conv{l}_aux and their children) are active when
/// num_conv_layers >= l; fc{j}_nodes / fc{j}_dropout when num_hidden >= j.
SearchSpace build_space(const RangeProfile& profile);

enum class PoolType { max, avg };

struct ConvBlockSpec {
  std::int64_t num_filters = 0;
  std::int64_t filter_size = 0;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool has_norm = false;
  std::int64_t norm_size = 0;
  bool has_pool = false;
  std::int64_t pool_size = 0;
  std::int64_t pool_stride = 0;
  PoolType pool_type = PoolType::max;
  bool has_aux_head = false;

  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

struct HiddenLayerSpec {
  std::int64_t num_nodes = 0;
  std::optional<double> dropout;

  friend bool operator==(const HiddenLayerSpec&, const HiddenLayerSpec&) = default;
};

struct Shape {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;

  std::int64_t volume() const { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A decoded network: conv blocks (conv, optional response norm, optional
/// pooling, optional auxiliary softmax head), hidden layers, softmax.
struct ArchitectureDescription {
  Shape input{3, 32, 32};
  std::vector<ConvBlockSpec> blocks;
  std::vector<HiddenLayerSpec> hidden;
  std::int64_t num_classes = 10;

  // Derived by make_architecture.
  std::vector<Shape> conv_outputs;   // after each convolution
  std::vector<Shape> block_outputs;  // after pooling (== conv output without pooling)
  std::int64_t trainable_param_count = 0;
};

struct InvalidArchitecture {
  std::string reason;
};

using DecodeResult = std::variant<ArchitectureDescription, InvalidArchitecture>;

/// out = floor((in + 2 pad - k) / stride) + 1; nullopt when < 1.
std::optional<std::int64_t> output_size(std::int64_t in, std::int64_t kernel, std::int64_t stride,
                                        std::int64_t pad);

/// Checks block fields, propagates spatial sizes and counts parameters.
DecodeResult make_architecture(std::vector<ConvBlockSpec> blocks, std::vector<HiddenLayerSpec> hidden,
                               Shape input = {3, 32, 32}, std::int64_t num_classes = 10);

/// `a` must be valid in `space` (a space produced by build_space).
DecodeResult decode(const SearchSpace& space, const Assignment& a);

/// The assignment that decodes to `arch` under `profile`'s space. Throws
/// Error if a field falls outside the profile.
Assignment encode(const RangeProfile& profile, const ArchitectureDescription& arch);

struct CountOptions {
  /// One learnable slope per neuron layer (conv and hidden).
  bool parametric_neurons = false;
};

/// conv: k*k*in*out + out; fully connected: in*out + out; main and auxiliary
/// softmax heads: flattened_in*classes + classes; norm and pooling: 0.
std::int64_t count_params(const ArchitectureDescription& arch, CountOptions opts = {});

/// Fixed training recipe carried alongside exported nets.
struct TrainingSchedule {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::vector<std::int64_t> phase_epochs{120, 20, 10};
  double cooling_factor = 10.0;  // learning rate divisor between phases
};

/// Layer-sectioned trainer config: `[name]` headers, `key=value` lines, LF
/// endings, a trailing [training] section. Byte-deterministic.
std::string export_config(const ArchitectureDescription& arch, const TrainingSchedule& schedule = {});

/// Gate in front of another evaluator: undecodable assignments come back as
/// invalid-arch with error 1.0; decodable ones get their trainer config
/// written to `run_dir/trial_<id>.cfg` (when run_dir is set) and are passed on.
class ArchitectureEvaluator : public Evaluator {
 public:
  ArchitectureEvaluator(const SearchSpace& space, Evaluator& inner, std::optional<std::string> run_dir = {},
                        TrainingSchedule schedule = {});
  EvaluationResult evaluate(const EvalRequest& request) override;

 private:
  const SearchSpace& space_;
  Evaluator& inner_;
  std::optional<std::string> run_dir_;
  TrainingSchedule schedule_;
};

const char* to_string(PoolType t);

}  // namespace smbo::dcn
