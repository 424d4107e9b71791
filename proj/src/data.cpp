#include "protoprune/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace protoprune {

namespace fs = std::filesystem;

namespace {

struct Line {
    std::string text;
    int number = 0;
};

std::vector<Line> read_lines(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ParseError("cannot open " + file.string());
    }
    std::vector<Line> lines;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.push_back({raw, number});
    }
    return lines;
}

long parse_int(const std::string& token, const fs::path& file, int line) {
    try {
        std::size_t pos = 0;
        const long value = std::stol(token, &pos);
        while (pos < token.size() &&
               (token[pos] == ' ' || token[pos] == '\t' || token[pos] == '\r')) {
            ++pos;
        }
        if (pos != token.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw ParseError(file.string() + ":" + std::to_string(line) + ": bad integer '" + token +
                         "'");
    }
}

std::pair<long, long> parse_pair(const Line& line, const fs::path& file) {
    const auto comma = line.text.find(',');
    if (comma == std::string::npos) {
        throw ParseError(file.string() + ":" + std::to_string(line.number) +
                         ": expected 'u, v' pair");
    }
    return {parse_int(line.text.substr(0, comma), file, line.number),
            parse_int(line.text.substr(comma + 1), file, line.number)};
}

fs::path find_prefix_file(const fs::path& directory, std::string* name_out) {
    if (!fs::is_directory(directory)) {
        throw ParseError("not a directory: " + directory.string());
    }
    for (const auto& entry : fs::directory_iterator(directory)) {
        const std::string fname = entry.path().filename().string();
        const std::string suffix = "_A.txt";
        if (fname.size() > suffix.size() &&
            fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0) {
            *name_out = fname.substr(0, fname.size() - suffix.size());
            return entry.path();
        }
    }
    throw ParseError("no *_A.txt edge list in " + directory.string());
}

// True when every row is exactly one-hot; fills per-node label ranks.
bool features_are_one_hot(const Dataset& data, std::vector<std::vector<int>>* ranks) {
    ranks->clear();
    for (const GraphSample& g : data) {
        std::vector<int> graph_ranks;
        for (int v = 0; v < g.num_nodes(); ++v) {
            int hot = -1;
            for (int f = 0; f < g.feature_dim(); ++f) {
                const double x = g.features(v, f);
                if (x == 1.0) {
                    if (hot >= 0) return false;
                    hot = f;
                } else if (x != 0.0) {
                    return false;
                }
            }
            if (hot < 0) return false;
            graph_ranks.push_back(hot);
        }
        ranks->push_back(std::move(graph_ranks));
    }
    return true;
}

bool features_are_constant_one(const Dataset& data) {
    for (const GraphSample& g : data) {
        if (g.feature_dim() != 1) return false;
        for (int v = 0; v < g.num_nodes(); ++v) {
            if (g.features(v, 0) != 1.0) return false;
        }
    }
    return true;
}

}  // namespace

int num_classes(const Dataset& data) {
    int max_label = -1;
    for (const GraphSample& g : data) {
        if (g.label) max_label = std::max(max_label, *g.label);
    }
    return max_label + 1;
}

Dataset load_tu_dataset(const fs::path& directory) {
    std::string name;
    const fs::path edge_file = find_prefix_file(directory, &name);
    const fs::path indicator_file = directory / (name + "_graph_indicator.txt");
    const fs::path label_file = directory / (name + "_graph_labels.txt");
    const fs::path node_label_file = directory / (name + "_node_labels.txt");

    // Node -> graph map; graph ids must be 1-based and non-decreasing.
    const std::vector<Line> indicator_lines = read_lines(indicator_file);
    if (indicator_lines.empty()) throw ParseError(indicator_file.string() + ": empty");
    std::vector<long> node_graph;
    node_graph.reserve(indicator_lines.size());
    long num_graphs = 0;
    for (const Line& line : indicator_lines) {
        const long g = parse_int(line.text, indicator_file, line.number);
        if (g < 1 || g < num_graphs) {
            throw InconsistentIndicatorError(indicator_file.string() + ":" +
                                             std::to_string(line.number) + ": graph id " +
                                             std::to_string(g) + " is non-monotone");
        }
        if (g > num_graphs + 1) {
            throw InconsistentIndicatorError(indicator_file.string() + ":" +
                                             std::to_string(line.number) + ": graph id " +
                                             std::to_string(g) + " skips " +
                                             std::to_string(num_graphs + 1));
        }
        num_graphs = std::max(num_graphs, g);
        node_graph.push_back(g - 1);
    }
    const long num_nodes = static_cast<long>(node_graph.size());

    // Per-graph node ranges (nodes of one graph are contiguous).
    std::vector<long> graph_start(num_graphs, 0), graph_size(num_graphs, 0);
    for (long v = 0; v < num_nodes; ++v) ++graph_size[node_graph[v]];
    for (long g = 1; g < num_graphs; ++g) graph_start[g] = graph_start[g - 1] + graph_size[g - 1];

    // Graph labels, remapped to 0..C-1 preserving sorted original order.
    const std::vector<Line> label_lines = read_lines(label_file);
    if (static_cast<long>(label_lines.size()) != num_graphs) {
        throw ParseError(label_file.string() + ": " + std::to_string(label_lines.size()) +
                         " labels for " + std::to_string(num_graphs) + " graphs");
    }
    std::vector<long> raw_labels;
    raw_labels.reserve(label_lines.size());
    for (const Line& line : label_lines) {
        raw_labels.push_back(parse_int(line.text, label_file, line.number));
    }
    std::map<long, int> label_map;
    for (long raw : raw_labels) label_map.emplace(raw, 0);
    int next_label = 0;
    for (auto& [raw, mapped] : label_map) mapped = next_label++;

    // Optional node labels, one-hot encoded over the sorted distinct values.
    std::vector<int> node_feature_rank;
    int feature_dim = 1;
    if (fs::exists(node_label_file)) {
        const std::vector<Line> node_lines = read_lines(node_label_file);
        if (static_cast<long>(node_lines.size()) != num_nodes) {
            throw ParseError(node_label_file.string() + ": " + std::to_string(node_lines.size()) +
                             " node labels for " + std::to_string(num_nodes) + " nodes");
        }
        std::vector<long> raw_node_labels;
        raw_node_labels.reserve(node_lines.size());
        for (const Line& line : node_lines) {
            raw_node_labels.push_back(parse_int(line.text, node_label_file, line.number));
        }
        std::map<long, int> node_label_map;
        for (long raw : raw_node_labels) node_label_map.emplace(raw, 0);
        int rank = 0;
        for (auto& [raw, mapped] : node_label_map) mapped = rank++;
        feature_dim = rank;
        node_feature_rank.reserve(raw_node_labels.size());
        for (long raw : raw_node_labels) node_feature_rank.push_back(node_label_map[raw]);
    }

    Dataset data(static_cast<std::size_t>(num_graphs));
    for (long g = 0; g < num_graphs; ++g) {
        GraphSample& sample = data[static_cast<std::size_t>(g)];
        sample.id = static_cast<int>(g);
        sample.label = label_map[raw_labels[static_cast<std::size_t>(g)]];
        const long n = graph_size[g];
        sample.adjacency = Mat::Zero(n, n);
        sample.features = Mat::Zero(n, feature_dim);
        for (long v = 0; v < n; ++v) {
            if (node_feature_rank.empty()) {
                sample.features(v, 0) = 1.0;
            } else {
                sample.features(v, node_feature_rank[static_cast<std::size_t>(graph_start[g] + v)]) = 1.0;
            }
        }
    }

    // Edges: 1-indexed global node pairs, symmetrized, self-loops dropped.
    for (const Line& line : read_lines(edge_file)) {
        const auto [u_raw, v_raw] = parse_pair(line, edge_file);
        if (u_raw < 1 || u_raw > num_nodes || v_raw < 1 || v_raw > num_nodes) {
            throw ParseError(edge_file.string() + ":" + std::to_string(line.number) +
                             ": node id outside [1, " + std::to_string(num_nodes) + "]");
        }
        const long u = u_raw - 1, v = v_raw - 1;
        if (node_graph[u] != node_graph[v]) {
            throw ParseError(edge_file.string() + ":" + std::to_string(line.number) +
                             ": edge spans two graphs");
        }
        if (u == v) continue;
        GraphSample& sample = data[static_cast<std::size_t>(node_graph[u])];
        const long base = graph_start[node_graph[u]];
        sample.adjacency(u - base, v - base) = 1.0;
        sample.adjacency(v - base, u - base) = 1.0;
    }
    return data;
}

void save_tu_dataset(const Dataset& data, const fs::path& directory, const std::string& name) {
    if (data.empty()) throw ConfigError("save_tu_dataset: empty dataset");
    for (const GraphSample& g : data) {
        if (!g.label) throw ConfigError("save_tu_dataset: every graph needs a label");
    }
    std::vector<std::vector<int>> node_ranks;
    const bool one_hot = features_are_one_hot(data, &node_ranks);
    if (!one_hot && !features_are_constant_one(data)) {
        throw ConfigError("save_tu_dataset: features are neither one-hot nor constant 1.0");
    }

    fs::create_directories(directory);
    std::ofstream edges(directory / (name + "_A.txt"));
    std::ofstream indicator(directory / (name + "_graph_indicator.txt"));
    std::ofstream labels(directory / (name + "_graph_labels.txt"));
    std::ofstream node_labels;
    if (one_hot) node_labels.open(directory / (name + "_node_labels.txt"));

    long node_offset = 0;
    for (std::size_t g = 0; g < data.size(); ++g) {
        const GraphSample& sample = data[g];
        for (int v = 0; v < sample.num_nodes(); ++v) {
            indicator << (g + 1) << "\n";
            if (one_hot) node_labels << node_ranks[g][static_cast<std::size_t>(v)] << "\n";
            for (int u = 0; u < sample.num_nodes(); ++u) {
                if (sample.adjacency(v, u) != 0.0) {
                    edges << (node_offset + v + 1) << ", " << (node_offset + u + 1) << "\n";
                }
            }
        }
        labels << *sample.label << "\n";
        node_offset += sample.num_nodes();
    }
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    const int C = static_cast<int>(spec.n_per_class.size());
    if (C < 2) throw ConfigError("generate_synthetic: need at least two classes");
    if (spec.nodes_min < spec.motif_size || spec.nodes_max < spec.nodes_min) {
        throw ConfigError("generate_synthetic: node range must fit the motif");
    }
    if (spec.feature_dim < 1 || spec.sigma < 0.0) {
        throw ConfigError("generate_synthetic: bad feature parameters");
    }

    Rng rng(derive_seed(seed, "synthetic"));
    Dataset data;
    int id = 0;
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < spec.n_per_class[c]; ++i) {
            const int n = spec.nodes_min +
                          static_cast<int>(rng.index(
                              static_cast<std::uint64_t>(spec.nodes_max - spec.nodes_min + 1)));
            GraphSample g;
            g.id = id++;
            g.label = c;
            g.adjacency = Mat::Zero(n, n);
            for (int u = 0; u < n; ++u) {
                for (int v = u + 1; v < n; ++v) {
                    if (rng.uniform() < spec.edge_prob) {
                        g.adjacency(u, v) = 1.0;
                        g.adjacency(v, u) = 1.0;
                    }
                }
            }
            // Planted motif on the first motif_size nodes: even classes get
            // a triangle fan (hub plus a rim path), odd classes a bare star.
            const int m = std::min(spec.motif_size, n);
            for (int v = 1; v < m; ++v) {
                g.adjacency(0, v) = 1.0;
                g.adjacency(v, 0) = 1.0;
                if (c % 2 == 0 && v + 1 < m) {
                    g.adjacency(v, v + 1) = 1.0;
                    g.adjacency(v + 1, v) = 1.0;
                }
            }
            g.features = Mat::Zero(n, spec.feature_dim);
            const int shifted_coord = c % spec.feature_dim;
            for (int v = 0; v < n; ++v) {
                for (int f = 0; f < spec.feature_dim; ++f) {
                    g.features(v, f) = rng.normal(0.0, spec.sigma);
                }
                g.features(v, shifted_coord) += spec.feature_gap * spec.sigma;
            }
            data.push_back(std::move(g));
        }
    }

    if (spec.probe_threshold > 0.0) {
        const double acc = linear_probe_accuracy(data, seed);
        if (acc < spec.probe_threshold) {
            throw ConfigError("generate_synthetic: linear probe accuracy " + std::to_string(acc) +
                              " below threshold " + std::to_string(spec.probe_threshold) +
                              "; increase feature_gap");
        }
    }
    return data;
}

double linear_probe_accuracy(const Dataset& data, std::uint64_t seed) {
    if (data.size() < 4) throw ConfigError("linear_probe_accuracy: dataset too small");
    const int C = num_classes(data);
    if (C < 2) throw ConfigError("linear_probe_accuracy: need labeled data with >= 2 classes");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "probe"));
    rng.shuffle(order);
    const std::size_t half = data.size() / 2;

    const int F = data.front().feature_dim();
    std::vector<Vec> centroids(static_cast<std::size_t>(C), Vec::Zero(F));
    std::vector<int> counts(static_cast<std::size_t>(C), 0);
    auto mean_features = [](const GraphSample& g) -> Vec {
        return g.features.colwise().mean().transpose();
    };
    for (std::size_t i = 0; i < half; ++i) {
        const GraphSample& g = data[order[i]];
        centroids[static_cast<std::size_t>(*g.label)] += mean_features(g);
        ++counts[static_cast<std::size_t>(*g.label)];
    }
    for (int c = 0; c < C; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            centroids[static_cast<std::size_t>(c)] /= counts[static_cast<std::size_t>(c)];
        }
    }

    std::size_t correct = 0, total = 0;
    for (std::size_t i = half; i < data.size(); ++i) {
        const GraphSample& g = data[order[i]];
        const Vec mf = mean_features(g);
        int best = -1;
        double best_dist = 0.0;
        for (int c = 0; c < C; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;
            const double d = (mf - centroids[static_cast<std::size_t>(c)]).squaredNorm();
            if (best < 0 || d < best_dist) {
                best = c;
                best_dist = d;
            }
        }
        correct += (best == *g.label) ? 1 : 0;
        ++total;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

Dataset apply_imbalance(const Dataset& train, int minority_class, int ratio_a, int ratio_b,
                        std::uint64_t seed) {
    const int C = num_classes(train);
    if (minority_class < 0 || minority_class >= C) {
        throw BadLabelError("apply_imbalance: minority class " + std::to_string(minority_class) +
                            " outside [0, " + std::to_string(C) + ")");
    }
    if (ratio_a < 1 || ratio_b < 1) throw ConfigError("apply_imbalance: ratio parts must be >= 1");

    const std::size_t total = train.size();
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(C));
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!train[i].label) throw ConfigError("apply_imbalance: unlabeled sample");
        by_class[static_cast<std::size_t>(*train[i].label)].push_back(i);
    }

    // Target counts: the minority gets its ratio share of the total; the
    // remainder is spread over the other classes proportionally.
    std::vector<std::size_t> target(static_cast<std::size_t>(C), 0);
    const double minority_share =
        static_cast<double>(ratio_a) / static_cast<double>(ratio_a + ratio_b);
    target[static_cast<std::size_t>(minority_class)] = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * minority_share));
    if (target[static_cast<std::size_t>(minority_class)] == 0 ||
        by_class[static_cast<std::size_t>(minority_class)].empty()) {
        throw EmptyClassError("apply_imbalance: minority class would be empty");
    }
    std::size_t rest = total - target[static_cast<std::size_t>(minority_class)];
    std::size_t others_current = 0;
    for (int c = 0; c < C; ++c) {
        if (c != minority_class) others_current += by_class[static_cast<std::size_t>(c)].size();
    }
    if (others_current == 0) throw EmptyClassError("apply_imbalance: no majority samples");
    std::size_t assigned = 0;
    int last_other = -1;
    for (int c = 0; c < C; ++c) {
        if (c == minority_class) continue;
        last_other = c;
        target[static_cast<std::size_t>(c)] = static_cast<std::size_t>(std::llround(
            static_cast<double>(rest) * static_cast<double>(by_class[static_cast<std::size_t>(c)].size()) /
            static_cast<double>(others_current)));
        assigned += target[static_cast<std::size_t>(c)];
    }
    // Absorb rounding drift into the last non-minority class.
    if (last_other >= 0 && assigned != rest) {
        const long drift = static_cast<long>(rest) - static_cast<long>(assigned);
        target[static_cast<std::size_t>(last_other)] =
            static_cast<std::size_t>(static_cast<long>(target[static_cast<std::size_t>(last_other)]) + drift);
    }

    Rng rng(derive_seed(seed, "imbalance"));
    std::vector<std::size_t> chosen;  // indices into train, kept in original order
    std::vector<std::size_t> duplicates;
    for (int c = 0; c < C; ++c) {
        auto& members = by_class[static_cast<std::size_t>(c)];
        const std::size_t want = target[static_cast<std::size_t>(c)];
        if (want == 0 && !members.empty()) {
            throw EmptyClassError("apply_imbalance: class " + std::to_string(c) +
                                  " would be empty");
        }
        if (want <= members.size()) {
            if (want == members.size()) {
                chosen.insert(chosen.end(), members.begin(), members.end());
            } else {
                std::vector<std::size_t> shuffled = members;
                rng.shuffle(shuffled);
                shuffled.resize(want);
                std::sort(shuffled.begin(), shuffled.end());
                chosen.insert(chosen.end(), shuffled.begin(), shuffled.end());
            }
        } else {
            chosen.insert(chosen.end(), members.begin(), members.end());
            for (std::size_t extra = 0; extra < want - members.size(); ++extra) {
                duplicates.push_back(members[rng.index(members.size())]);
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());

    Dataset out;
    out.reserve(chosen.size() + duplicates.size());
    for (std::size_t i : chosen) out.push_back(train[i]);
    for (std::size_t i : duplicates) out.push_back(train[i]);
    return out;
}

Dataset inject_noise(const Dataset& train, double fraction, double sigma, std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw ConfigError("inject_noise: fraction must be in [0, 1)");
    }
    if (sigma < 0.0) throw ConfigError("inject_noise: sigma must be >= 0");

    Dataset out = train;
    const std::size_t count =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(train.size())));
    if (count == 0) return out;

    Rng rng(derive_seed(seed, "noise"));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(count);
    std::sort(order.begin(), order.end());

    for (std::size_t i : order) {
        GraphSample& g = out[i];
        for (int v = 0; v < g.num_nodes(); ++v) {
            for (int f = 0; f < g.feature_dim(); ++f) {
                g.features(v, f) += rng.normal(0.0, sigma);
            }
        }
        g.is_outlier = true;
    }
    return out;
}

void SplitSpec::validate() const {
    if (train_frac <= 0.0 || val_frac < 0.0 || test_frac < 0.0) {
        throw ConfigError("split fractions must be positive (train) and non-negative");
    }
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
}

DatasetSplit split_dataset(const Dataset& data, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, "split"));
    rng.shuffle(order);

    const std::size_t n = data.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(spec.train_frac * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(spec.val_frac * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const GraphSample& g = data[order[i]];
        if (i < n_train) {
            split.train.push_back(g);
        } else if (i < n_train + n_val) {
            split.val.push_back(g);
        } else {
            split.test.push_back(g);
        }
    }
    return split;
}

}  // namespace protoprune
