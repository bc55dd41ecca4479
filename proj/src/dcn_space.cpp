#include "smbo/dcn_space.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "smbo/error.hpp"
#include "smbo/format.hpp"

namespace smbo::dcn {

const char* to_string(PoolType t) { return t == PoolType::max ? "max" : "avg"; }

RangeProfile RangeProfile::minimal() {
  RangeProfile p;
  p.name = "dcn-minimal";
  p.min_conv_layers = p.max_conv_layers = 2;
  p.filters = {32};
  p.filter_sizes = {3};
  p.min_stride = p.max_stride = 1;
  p.min_pad_fraction = p.max_pad_fraction = 0.0;
  p.norm_options = {false};
  p.pool_options = {false};
  p.aux_options = {false};
  p.min_hidden = p.max_hidden = 0;
  p.min_nodes = p.max_nodes = 256;
  p.dropout_options = {false};
  return p;
}

namespace {

std::vector<Value> as_values(const std::vector<std::int64_t>& xs) { return {xs.begin(), xs.end()}; }
std::vector<Value> as_values(const std::vector<double>& xs) { return {xs.begin(), xs.end()}; }
std::vector<Value> as_values(const std::vector<std::string>& xs) { return {xs.begin(), xs.end()}; }

std::vector<Value> range_values(std::int64_t lo, std::int64_t hi) {
  std::vector<Value> out;
  for (auto i = lo; i <= hi; ++i) out.emplace_back(i);
  return out;
}

bool has_both(const std::vector<bool>& opts) {
  return std::find(opts.begin(), opts.end(), true) != opts.end() &&
         std::find(opts.begin(), opts.end(), false) != opts.end();
}

bool allows_true(const std::vector<bool>& opts) { return std::find(opts.begin(), opts.end(), true) != opts.end(); }

ParamSpec toggle(std::string name, const std::vector<bool>& opts) {
  if (has_both(opts)) return ParamSpec::boolean(std::move(name));
  if (opts.empty()) throw Error("toggle '" + name + "' needs at least one option");
  return ParamSpec::categorical(std::move(name), {Value(opts.front())});
}

template <typename T>
std::vector<T> typed_choices(const ParamSpec& p) {
  std::vector<T> out;
  for (const auto& v : p.choices) {
    const auto* x = std::get_if<T>(&v);
    if (x == nullptr) throw Error("profile param '" + p.name + "': choice " + smbo::to_string(v) + " has the wrong type");
    out.push_back(*x);
  }
  return out;
}

std::vector<std::int64_t> int_choices(const ParamSpec& p) {
  if (p.kind == ParamKind::integer) {
    std::vector<std::int64_t> out;
    for (auto i = static_cast<std::int64_t>(p.lo); i <= static_cast<std::int64_t>(p.hi); ++i) out.push_back(i);
    return out;
  }
  if (p.kind != ParamKind::categorical) throw Error("profile param '" + p.name + "' must be categorical or integer");
  return typed_choices<std::int64_t>(p);
}

std::pair<std::int64_t, std::int64_t> int_range(const ParamSpec& p) {
  if (p.kind != ParamKind::integer) throw Error("profile param '" + p.name + "' must be an integer range");
  return {static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi)};
}

std::vector<bool> bool_options(const ParamSpec& p) {
  if (p.kind == ParamKind::boolean) return {false, true};
  if (p.kind != ParamKind::categorical) throw Error("profile param '" + p.name + "' must be boolean");
  return typed_choices<bool>(p);
}

}  // namespace

nlohmann::json RangeProfile::to_json() const {
  std::vector<ParamSpec> ps;
  ps.push_back(ParamSpec::integer("num_conv_layers", min_conv_layers, max_conv_layers));
  ps.push_back(ParamSpec::categorical("filters", as_values(filters)));
  ps.push_back(ParamSpec::categorical("filter_size", as_values(filter_sizes)));
  ps.push_back(ParamSpec::integer("stride", min_stride, max_stride));
  ps.push_back(ParamSpec::real("pad_fraction", min_pad_fraction, max_pad_fraction));
  ps.push_back(toggle("norm", norm_options));
  ps.push_back(ParamSpec::categorical("norm_size", as_values(norm_sizes)));
  ps.push_back(toggle("pool", pool_options));
  ps.push_back(ParamSpec::categorical("pool_size", as_values(pool_sizes)));
  ps.push_back(ParamSpec::categorical("pool_stride", as_values(pool_strides)));
  ps.push_back(ParamSpec::categorical("pool_type", as_values(pool_types)));
  ps.push_back(toggle("aux", aux_options));
  ps.push_back(ParamSpec::integer("num_hidden", min_hidden, max_hidden));
  ps.push_back(ParamSpec::integer("hidden_nodes", min_nodes, max_nodes));
  ps.push_back(toggle("dropout", dropout_options));
  ps.push_back(ParamSpec::categorical("dropout_rate", as_values(dropout_rates)));
  auto j = SearchSpace(name, version, std::move(ps)).to_json();
  j["kind"] = "dcn-profile";
  return j;
}

bool is_profile_document(const nlohmann::json& j) {
  return j.is_object() && j.contains("kind") && j["kind"] == "dcn-profile";
}

RangeProfile RangeProfile::from_json(const nlohmann::json& j) {
  const auto template_space = SearchSpace::from_json(j);
  RangeProfile p;
  p.name = template_space.name();
  p.version = template_space.version();
  for (const auto& spec : template_space.params()) {
    const auto& n = spec.name;
    if (spec.condition) throw Error("profile param '" + n + "' cannot be conditional");
    if (n == "num_conv_layers") {
      std::tie(p.min_conv_layers, p.max_conv_layers) = int_range(spec);
    } else if (n == "filters") {
      p.filters = int_choices(spec);
    } else if (n == "filter_size") {
      p.filter_sizes = int_choices(spec);
    } else if (n == "stride") {
      std::tie(p.min_stride, p.max_stride) = int_range(spec);
    } else if (n == "pad_fraction") {
      if (spec.kind != ParamKind::real) throw Error("profile param 'pad_fraction' must be real");
      p.min_pad_fraction = spec.lo;
      p.max_pad_fraction = spec.hi;
    } else if (n == "norm") {
      p.norm_options = bool_options(spec);
    } else if (n == "norm_size") {
      p.norm_sizes = int_choices(spec);
    } else if (n == "pool") {
      p.pool_options = bool_options(spec);
    } else if (n == "pool_size") {
      p.pool_sizes = int_choices(spec);
    } else if (n == "pool_stride") {
      p.pool_strides = int_choices(spec);
    } else if (n == "pool_type") {
      if (spec.kind != ParamKind::categorical) throw Error("profile param 'pool_type' must be categorical");
      p.pool_types = typed_choices<std::string>(spec);
    } else if (n == "aux") {
      p.aux_options = bool_options(spec);
    } else if (n == "num_hidden") {
      std::tie(p.min_hidden, p.max_hidden) = int_range(spec);
    } else if (n == "hidden_nodes") {
      std::tie(p.min_nodes, p.max_nodes) = int_range(spec);
    } else if (n == "dropout") {
      p.dropout_options = bool_options(spec);
    } else if (n == "dropout_rate") {
      if (spec.kind != ParamKind::categorical) throw Error("profile param 'dropout_rate' must be categorical");
      p.dropout_rates = typed_choices<double>(spec);
    } else {
      throw Error("unknown profile param '" + n + "'");
    }
  }
  for (const auto& t : p.pool_types)
    if (t != "max" && t != "avg") throw Error("pool_type choices must be 'max' or 'avg'");
  for (double r : p.dropout_rates)
    if (!(r > 0.0 && r < 1.0)) throw Error("dropout rates must lie in (0, 1)");
  if (p.min_pad_fraction < 0.0 || p.max_pad_fraction > 1.0) throw Error("pad_fraction must lie in [0, 1]");
  if (p.min_conv_layers < 1) throw Error("num_conv_layers must be at least 1");
  if (p.min_hidden < 0) throw Error("num_hidden must be >= 0");
  return p;
}

SearchSpace load_space_file(const std::string& path, std::optional<RangeProfile>* profile) {
  auto j = read_json_file(path);
  try {
    if (is_profile_document(j)) {
      auto p = RangeProfile::from_json(j);
      auto space = build_space(p);
      if (profile != nullptr) *profile = std::move(p);
      return space;
    }
    if (profile != nullptr) profile->reset();
    return SearchSpace::from_json(j);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string conv_name(std::int64_t layer, const char* field) {
  return "conv" + std::to_string(layer) + "_" + field;
}

std::string fc_name(std::int64_t layer, const char* field) { return "fc" + std::to_string(layer) + "_" + field; }

}  // namespace

SearchSpace build_space(const RangeProfile& rp) {
  if (rp.min_conv_layers > rp.max_conv_layers) throw Error("num_conv_layers range is empty");
  if (rp.min_hidden > rp.max_hidden) throw Error("num_hidden range is empty");

  std::vector<ParamSpec> ps;
  ps.push_back(ParamSpec::integer("num_conv_layers", rp.min_conv_layers, rp.max_conv_layers));
  for (std::int64_t l = 1; l <= rp.max_conv_layers; ++l) {
    auto gate = [&](ParamSpec p) {
      if (l > rp.min_conv_layers) p.when_any("num_conv_layers", range_values(l, rp.max_conv_layers));
      return p;
    };
    ps.push_back(gate(ParamSpec::categorical(conv_name(l, "filters"), as_values(rp.filters))));
    ps.push_back(gate(ParamSpec::categorical(conv_name(l, "size"), as_values(rp.filter_sizes))));
    ps.push_back(gate(ParamSpec::integer(conv_name(l, "stride"), rp.min_stride, rp.max_stride)));
    ps.push_back(gate(ParamSpec::real(conv_name(l, "pad"), rp.min_pad_fraction, rp.max_pad_fraction)));

    ps.push_back(gate(toggle(conv_name(l, "norm"), rp.norm_options)));
    if (allows_true(rp.norm_options))
      ps.push_back(ParamSpec::categorical(conv_name(l, "norm_size"), as_values(rp.norm_sizes))
                       .when(conv_name(l, "norm"), true));

    ps.push_back(gate(toggle(conv_name(l, "pool"), rp.pool_options)));
    if (allows_true(rp.pool_options)) {
      ps.push_back(ParamSpec::categorical(conv_name(l, "pool_size"), as_values(rp.pool_sizes))
                       .when(conv_name(l, "pool"), true));
      ps.push_back(ParamSpec::categorical(conv_name(l, "pool_stride"), as_values(rp.pool_strides))
                       .when(conv_name(l, "pool"), true));
      ps.push_back(ParamSpec::categorical(conv_name(l, "pool_type"), as_values(rp.pool_types))
                       .when(conv_name(l, "pool"), true));
    }
    ps.push_back(gate(toggle(conv_name(l, "aux"), rp.aux_options)));
  }

  ps.push_back(ParamSpec::integer("num_hidden", rp.min_hidden, rp.max_hidden));
  for (std::int64_t j = 1; j <= rp.max_hidden; ++j) {
    auto gate = [&](ParamSpec p) {
      if (j > rp.min_hidden) p.when_any("num_hidden", range_values(j, rp.max_hidden));
      return p;
    };
    ps.push_back(gate(ParamSpec::integer(fc_name(j, "nodes"), rp.min_nodes, rp.max_nodes)));
    ps.push_back(gate(toggle(fc_name(j, "dropout"), rp.dropout_options)));
    if (allows_true(rp.dropout_options))
      ps.push_back(ParamSpec::categorical(fc_name(j, "dropout_rate"), as_values(rp.dropout_rates))
                       .when(fc_name(j, "dropout"), true));
  }
  return SearchSpace(rp.name, rp.version, std::move(ps));
}

// ---------------------------------------------------------------------------

std::optional<std::int64_t> output_size(std::int64_t in, std::int64_t kernel, std::int64_t stride,
                                        std::int64_t pad) {
  const std::int64_t span = in + 2 * pad - kernel;
  if (span < 0 || stride < 1) return std::nullopt;
  return span / stride + 1;
}

DecodeResult make_architecture(std::vector<ConvBlockSpec> blocks, std::vector<HiddenLayerSpec> hidden,
                               Shape input, std::int64_t num_classes) {
  ArchitectureDescription arch;
  arch.input = input;
  arch.num_classes = num_classes;
  if (input.channels < 1 || input.height < 1 || input.width < 1) return InvalidArchitecture{"empty input"};
  if (num_classes < 1) return InvalidArchitecture{"no output classes"};

  Shape cur = input;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string layer = "conv" + std::to_string(i + 1);
    if (b.num_filters < 1 || b.filter_size < 1 || b.stride < 1)
      return InvalidArchitecture{layer + ": filters, size and stride must be >= 1"};
    if (b.padding < 0 || b.padding >= b.filter_size)
      return InvalidArchitecture{layer + ": padding must lie in [0, filter_size)"};
    if (b.has_norm && b.norm_size < 1) return InvalidArchitecture{layer + ": norm size must be >= 1"};
    if (b.has_pool && (b.pool_size < 1 || b.pool_stride < 1))
      return InvalidArchitecture{layer + ": pool size and stride must be >= 1"};

    auto h = output_size(cur.height, b.filter_size, b.stride, b.padding);
    auto w = output_size(cur.width, b.filter_size, b.stride, b.padding);
    if (!h || !w) return InvalidArchitecture{"spatial size < 1 after " + layer};
    cur = Shape{b.num_filters, *h, *w};
    arch.conv_outputs.push_back(cur);
    if (b.has_pool) {
      h = output_size(cur.height, b.pool_size, b.pool_stride, 0);
      w = output_size(cur.width, b.pool_size, b.pool_stride, 0);
      if (!h || !w) return InvalidArchitecture{"spatial size < 1 after pooling in " + layer};
      cur = Shape{cur.channels, *h, *w};
    }
    arch.block_outputs.push_back(cur);
  }
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    if (hidden[j].num_nodes < 1) return InvalidArchitecture{"fc" + std::to_string(j + 1) + ": no nodes"};
    if (hidden[j].dropout && !(*hidden[j].dropout > 0.0 && *hidden[j].dropout < 1.0))
      return InvalidArchitecture{"fc" + std::to_string(j + 1) + ": dropout must lie in (0, 1)"};
  }
  arch.blocks = std::move(blocks);
  arch.hidden = std::move(hidden);
  arch.trainable_param_count = count_params(arch);
  return arch;
}

DecodeResult decode(const SearchSpace& space, const Assignment& a) {
  require_valid(space, a);
  const auto n_conv = a.get_int("num_conv_layers");
  std::vector<ConvBlockSpec> blocks;
  for (std::int64_t l = 1; l <= n_conv; ++l) {
    ConvBlockSpec b;
    b.num_filters = a.get_int(conv_name(l, "filters"));
    b.filter_size = a.get_int(conv_name(l, "size"));
    b.stride = a.get_int(conv_name(l, "stride"));
    const double frac = a.get_real(conv_name(l, "pad"));
    b.padding = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(frac * static_cast<double>(b.filter_size))),
                                       b.filter_size - 1);
    b.has_norm = a.get_bool(conv_name(l, "norm"));
    if (b.has_norm) b.norm_size = a.get_int(conv_name(l, "norm_size"));
    b.has_pool = a.get_bool(conv_name(l, "pool"));
    if (b.has_pool) {
      b.pool_size = a.get_int(conv_name(l, "pool_size"));
      b.pool_stride = a.get_int(conv_name(l, "pool_stride"));
      b.pool_type = a.get_string(conv_name(l, "pool_type")) == "avg" ? PoolType::avg : PoolType::max;
    }
    b.has_aux_head = a.get_bool(conv_name(l, "aux"));
    blocks.push_back(b);
  }
  std::vector<HiddenLayerSpec> hidden;
  const auto n_hidden = a.get_int("num_hidden");
  for (std::int64_t j = 1; j <= n_hidden; ++j) {
    HiddenLayerSpec h;
    h.num_nodes = a.get_int(fc_name(j, "nodes"));
    if (a.get_bool(fc_name(j, "dropout"))) h.dropout = a.get_real(fc_name(j, "dropout_rate"));
    hidden.push_back(h);
  }
  return make_architecture(std::move(blocks), std::move(hidden));
}

Assignment encode(const RangeProfile& profile, const ArchitectureDescription& arch) {
  Assignment a;
  a.set("num_conv_layers", static_cast<std::int64_t>(arch.blocks.size()));
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const auto l = static_cast<std::int64_t>(i + 1);
    const auto& b = arch.blocks[i];
    a.set(conv_name(l, "filters"), b.num_filters);
    a.set(conv_name(l, "size"), b.filter_size);
    a.set(conv_name(l, "stride"), b.stride);
    // Centre of the fraction interval that floors to this padding.
    a.set(conv_name(l, "pad"), (static_cast<double>(b.padding) + 0.5) / static_cast<double>(b.filter_size));
    a.set(conv_name(l, "norm"), b.has_norm);
    if (b.has_norm) a.set(conv_name(l, "norm_size"), b.norm_size);
    a.set(conv_name(l, "pool"), b.has_pool);
    if (b.has_pool) {
      a.set(conv_name(l, "pool_size"), b.pool_size);
      a.set(conv_name(l, "pool_stride"), b.pool_stride);
      a.set(conv_name(l, "pool_type"), std::string(to_string(b.pool_type)));
    }
    a.set(conv_name(l, "aux"), b.has_aux_head);
  }
  a.set("num_hidden", static_cast<std::int64_t>(arch.hidden.size()));
  for (std::size_t j = 0; j < arch.hidden.size(); ++j) {
    const auto l = static_cast<std::int64_t>(j + 1);
    a.set(fc_name(l, "nodes"), arch.hidden[j].num_nodes);
    a.set(fc_name(l, "dropout"), arch.hidden[j].dropout.has_value());
    if (arch.hidden[j].dropout) a.set(fc_name(l, "dropout_rate"), *arch.hidden[j].dropout);
  }
  auto violations = validate(build_space(profile), a);
  if (!violations.empty()) {
    std::string msg = "architecture is not expressible in profile '" + profile.name + "':";
    for (const auto& v : violations) msg += " " + v + ";";
    throw Error(msg);
  }
  return a;
}

// ---------------------------------------------------------------------------

std::int64_t count_params(const ArchitectureDescription& arch, CountOptions opts) {
  std::int64_t total = 0;
  std::int64_t in_channels = arch.input.channels;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const auto& b = arch.blocks[i];
    total += b.filter_size * b.filter_size * in_channels * b.num_filters + b.num_filters;
    if (opts.parametric_neurons) total += 1;
    if (b.has_aux_head && i < arch.block_outputs.size())
      total += arch.block_outputs[i].volume() * arch.num_classes + arch.num_classes;
    in_channels = b.num_filters;
  }
  std::int64_t flat = arch.block_outputs.empty() ? arch.input.volume() : arch.block_outputs.back().volume();
  for (const auto& h : arch.hidden) {
    total += flat * h.num_nodes + h.num_nodes;
    if (opts.parametric_neurons) total += 1;
    flat = h.num_nodes;
  }
  total += flat * arch.num_classes + arch.num_classes;
  return total;
}

// ---------------------------------------------------------------------------

std::string export_config(const ArchitectureDescription& arch, const TrainingSchedule& schedule) {
  std::string out;
  auto section = [&](const std::string& name) {
    if (!out.empty()) out += "\n";
    out += "[" + name + "]\n";
  };
  auto kv = [&](const std::string& key, const std::string& value) { out += key + "=" + value + "\n"; };
  auto kvi = [&](const std::string& key, std::int64_t value) { kv(key, std::to_string(value)); };

  section("data");
  kv("type", "data");
  kvi("channels", arch.input.channels);
  kvi("height", arch.input.height);
  kvi("width", arch.input.width);

  std::string prev = "data";
  std::int64_t channels = arch.input.channels;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const auto& b = arch.blocks[i];
    const std::string n = std::to_string(i + 1);
    section("conv" + n);
    kv("type", "conv");
    kv("inputs", prev);
    kvi("channels", channels);
    kvi("filters", b.num_filters);
    kvi("filterSize", b.filter_size);
    kvi("stride", b.stride);
    kvi("padding", b.padding);
    kv("neuron", "relu");
    kvi("outputSize", arch.conv_outputs[i].height);
    prev = "conv" + n;
    channels = b.num_filters;
    if (b.has_norm) {
      section("rnorm" + n);
      kv("type", "cmrnorm");
      kv("inputs", prev);
      kvi("channels", channels);
      kvi("size", b.norm_size);
      kv("scale", "0.75");
      prev = "rnorm" + n;
    }
    if (b.has_pool) {
      section("pool" + n);
      kv("type", "pool");
      kv("pool", to_string(b.pool_type));
      kv("inputs", prev);
      kvi("channels", channels);
      kvi("sizeX", b.pool_size);
      kvi("stride", b.pool_stride);
      kvi("outputSize", arch.block_outputs[i].height);
      prev = "pool" + n;
    }
    if (b.has_aux_head) {
      section("aux" + n);
      kv("type", "aux-softmax");
      kv("inputs", prev);
      kvi("outputs", arch.num_classes);
    }
  }
  for (std::size_t j = 0; j < arch.hidden.size(); ++j) {
    const auto& h = arch.hidden[j];
    const std::string n = "fc" + std::to_string(j + 1);
    section(n);
    kv("type", "fc");
    kv("inputs", prev);
    kvi("outputs", h.num_nodes);
    kv("neuron", "relu");
    if (h.dropout) kv("dropout", format_double(*h.dropout));
    prev = n;
  }
  section("softmax");
  kv("type", "softmax");
  kv("inputs", prev);
  kvi("outputs", arch.num_classes);

  section("training");
  kv("learning_rate", format_double(schedule.learning_rate));
  kv("momentum", format_double(schedule.momentum));
  kv("weight_decay", format_double(schedule.weight_decay));
  std::string epochs;
  for (std::size_t i = 0; i < schedule.phase_epochs.size(); ++i)
    epochs += (i == 0 ? "" : ",") + std::to_string(schedule.phase_epochs[i]);
  kv("epochs", epochs);
  kv("cooling_factor", format_double(schedule.cooling_factor));
  kvi("trainable_params", arch.trainable_param_count);
  return out;
}

// ---------------------------------------------------------------------------

ArchitectureEvaluator::ArchitectureEvaluator(const SearchSpace& space, Evaluator& inner,
                                             std::optional<std::string> run_dir, TrainingSchedule schedule)
    : space_(space), inner_(inner), run_dir_(std::move(run_dir)), schedule_(std::move(schedule)) {}

EvaluationResult ArchitectureEvaluator::evaluate(const EvalRequest& request) {
  auto decoded = decode(space_, *request.assignment);
  if (const auto* bad = std::get_if<InvalidArchitecture>(&decoded))
    return EvaluationResult::failed(bad->reason, Status::invalid_arch);
  const auto& arch = std::get<ArchitectureDescription>(decoded);
  EvalRequest forwarded = request;
  if (run_dir_) {
    const auto path = (std::filesystem::path(*run_dir_) / ("trial_" + std::to_string(request.trial_id) + ".cfg")).string();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(path + ": cannot write trainer config");
    f << export_config(arch, schedule_);
    forwarded.config_path = path;
  }
  return inner_.evaluate(forwarded);
}

}  // namespace smbo::dcn
