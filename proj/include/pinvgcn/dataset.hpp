#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/gaussian_cloud.hpp"
#include "pinvgcn/hypergraph.hpp"
#include "pinvgcn/model.hpp"
#include "pinvgcn/random.hpp"
#include "pinvgcn/sparse_graph.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// A loaded benchmark instance: the graph-like source, input features and
/// per-node class labels. Point clouds use the raw coordinates as features,
/// hypergraphs their 0/1 incidence matrix.
struct Dataset {
    std::variant<SparseGraph, GaussianCloud, Hypergraph> source;
    Mat features; // n x d
    std::vector<int> labels;
    int classes = 0;
    std::vector<std::string> class_names;

    Index n() const { return features.rows(); }

    const GaussianCloud& cloud() const { return std::get<GaussianCloud>(source); }
    const Hypergraph& hypergraph() const { return std::get<Hypergraph>(source); }
    const SparseGraph& graph() const { return std::get<SparseGraph>(source); }
    bool is_cloud() const { return std::holds_alternative<GaussianCloud>(source); }
    bool is_hypergraph() const { return std::holds_alternative<Hypergraph>(source); }
};

struct SplitSpec {
    Index per_class = 10;
    std::uint64_t seed = 0;
    Index run_count = 1;
};

// ---------------------------------------------------------------------------
// point clouds: `x y z label` per line, `#` comments
// ---------------------------------------------------------------------------

inline Dataset load_point_cloud(std::istream& in, Real sigma,
                                const std::string& origin = "<stream>") {
    std::vector<std::array<Real, 3>> pts;
    std::vector<long> raw_labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        Real x, y, z;
        long label;
        if (!(ls >> x >> y >> z >> label) || label < 0)
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected `x y z label` with label >= 0");
        pts.push_back({x, y, z});
        raw_labels.push_back(label);
    }
    require(pts.size() >= 2, origin + ": need at least 2 points");

    Mat P(static_cast<Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (Index c = 0; c < 3; ++c) P(static_cast<Index>(i), c) = pts[i][static_cast<std::size_t>(c)];

    // remap labels to 0..m-1, preserving sorted original order
    std::vector<long> classes(raw_labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    Dataset ds;
    ds.features = P;
    ds.source = GaussianCloud(std::move(P), sigma);
    ds.classes = static_cast<int>(classes.size());
    ds.labels.resize(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
        ds.labels[i] = static_cast<int>(
            std::lower_bound(classes.begin(), classes.end(), raw_labels[i]) - classes.begin());
    for (long c : classes) ds.class_names.push_back(std::to_string(c));
    return ds;
}

inline Dataset load_point_cloud(const std::string& path, Real sigma) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open point cloud: " + path);
    return load_point_cloud(in, sigma, path);
}

inline void save_point_cloud(std::ostream& out, ConstMatRef points,
                             const std::vector<int>& labels) {
    require_dims(points.cols() == 3 && points.rows() == static_cast<Index>(labels.size()),
                 "save_point_cloud: shape mismatch");
    out << std::setprecision(std::numeric_limits<Real>::max_digits10);
    for (Index i = 0; i < points.rows(); ++i)
        out << points(i, 0) << ' ' << points(i, 1) << ' ' << points(i, 2) << ' '
            << labels[static_cast<std::size_t>(i)] << '\n';
}

inline void save_point_cloud(const std::string& path, ConstMatRef points,
                             const std::vector<int>& labels) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot open point cloud for writing: " + path);
    save_point_cloud(out, points, labels);
}

// ---------------------------------------------------------------------------
// categorical tables + schema files
// ---------------------------------------------------------------------------

/// Schema file: one line per column `name role [bins]`, `#` comments.
inline CategoricalSchema load_schema(std::istream& in, const std::string& origin = "<stream>") {
    CategoricalSchema schema;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        CategoricalSchema::Column col;
        std::string role;
        if (!(ls >> col.name >> role))
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected `name role [bins]`");
        if (role == "categorical") col.role = ColumnRole::Categorical;
        else if (role == "continuous") col.role = ColumnRole::Continuous;
        else if (role == "binary") col.role = ColumnRole::Binary;
        else if (role == "label") col.role = ColumnRole::Label;
        else if (role == "ignore") col.role = ColumnRole::Ignore;
        else
            throw ParseError(origin + ":" + std::to_string(line_no) + ": unknown role `" +
                             role + "`");
        int bins = 10;
        if (ls >> bins) {
            require(bins >= 1, origin + ":" + std::to_string(line_no) + ": bins must be >= 1");
            col.bins = bins;
        }
        schema.columns.push_back(std::move(col));
    }
    require(!schema.columns.empty(), origin + ": empty schema");
    schema.label_column(); // validates exactly one label column
    return schema;
}

inline CategoricalSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schema: " + path);
    return load_schema(in, path);
}

inline TableRows read_delimited(std::istream& in, char delimiter, bool has_header,
                                const std::string& origin = "<stream>") {
    TableRows rows;
    std::string line;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, delimiter)) cells.push_back(cell);
        if (!line.empty() && line.back() == delimiter) cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    require(!rows.empty(), origin + ": no data rows");
    return rows;
}

/// Builds a hypergraph dataset from a delimited table plus schema. An
/// optional class subset (raw label values) filters rows before hyperedges
/// are formed, so pruning sees final membership counts.
inline Dataset load_categorical(std::istream& table_in, const CategoricalSchema& schema,
                                const std::vector<std::string>& class_subset = {},
                                char delimiter = ',', bool has_header = true,
                                const std::string& origin = "<stream>") {
    TableRows rows = read_delimited(table_in, delimiter, has_header, origin);
    for (std::size_t i = 0; i < rows.size(); ++i)
        require(rows[i].size() == schema.columns.size(),
                origin + ": row " + std::to_string(i + 1) + " has " +
                    std::to_string(rows[i].size()) + " cells, schema expects " +
                    std::to_string(schema.columns.size()));

    if (!class_subset.empty()) {
        const std::size_t label_col = static_cast<std::size_t>(schema.label_column());
        TableRows kept;
        kept.reserve(rows.size());
        for (auto& row : rows)
            if (std::find(class_subset.begin(), class_subset.end(), row[label_col]) !=
                class_subset.end())
                kept.push_back(std::move(row));
        require(!kept.empty(), origin + ": class subset filtered out every row");
        rows = std::move(kept);
    }

    CategoricalHypergraph ch = from_categorical_table(rows, schema);
    Dataset ds;
    ds.features = incidence_dense(ch.hypergraph);
    ds.labels = std::move(ch.labels);
    ds.classes = static_cast<int>(ch.class_names.size());
    ds.class_names = std::move(ch.class_names);
    ds.source = std::move(ch.hypergraph);
    return ds;
}

inline Dataset load_categorical(const std::string& table_path, const std::string& schema_path,
                                const std::vector<std::string>& class_subset = {},
                                char delimiter = ',', bool has_header = true) {
    CategoricalSchema schema = load_schema(schema_path);
    std::ifstream in(table_path);
    if (!in) throw ParseError("cannot open table: " + table_path);
    return load_categorical(in, schema, class_subset, delimiter, has_header, table_path);
}

// ---------------------------------------------------------------------------
// splits
// ---------------------------------------------------------------------------

/// Samples `per_class` training indices per class, uniformly without
/// replacement within each class (classes in ascending order, partial
/// Fisher-Yates). Output indices sorted ascending.
inline Split sample_split(const std::vector<int>& labels, int classes, Index per_class,
                          Rng& rng) {
    require(per_class >= 1, "split: per_class must be >= 1");
    Split s;
    s.labels = labels;
    s.classes = classes;
    for (int c = 0; c < classes; ++c) {
        std::vector<Index> pool;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) pool.push_back(static_cast<Index>(i));
        require(static_cast<Index>(pool.size()) >= per_class,
                "split: class " + std::to_string(c) + " has only " +
                    std::to_string(pool.size()) + " samples, needs " +
                    std::to_string(per_class));
        for (Index k = 0; k < per_class; ++k) {
            const Index j = k + rng.below(static_cast<Index>(pool.size()) - k);
            std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
            s.train_idx.push_back(pool[static_cast<std::size_t>(k)]);
        }
    }
    std::sort(s.train_idx.begin(), s.train_idx.end());
    return s;
}

/// One split per run; run j draws from a generator seeded with seed + j,
/// matching the in-run sampling order of the benchmark harness.
inline std::vector<Split> make_splits(const Dataset& ds, const SplitSpec& spec) {
    std::vector<Split> splits;
    splits.reserve(static_cast<std::size_t>(spec.run_count));
    for (Index j = 0; j < spec.run_count; ++j) {
        Rng rng(spec.seed + static_cast<std::uint64_t>(j));
        splits.push_back(sample_split(ds.labels, ds.classes, spec.per_class, rng));
    }
    return splits;
}

} // namespace pinvgcn
