#ifndef SXADMM_IO_HPP_
#define SXADMM_IO_HPP_

#include <json.hpp>

#include <fstream>
#include <iomanip>

#include "sxadmm/admm.hpp"
#include "sxadmm/types.hpp"

namespace sxadmm {

using Json = nlohmann::json;

namespace iodetail {

inline Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const Vector& v) {
    Json arr = Json::array();
    for (Index j = 0; j < v.size(); ++j) arr.push_back(v[j]);
    return arr;
}

inline Matrix matrix_from(const Json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw FileFormatError(std::string("expected a nested array for ") + what);
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        if (static_cast<Index>(j[r].size()) != cols)
            throw FileFormatError(std::string("ragged rows in ") + what);
        for (Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

inline Vector vector_from(const Json& j, const char* what) {
    if (!j.is_array()) throw FileFormatError(std::string("expected an array for ") + what);
    Vector v(static_cast<Index>(j.size()));
    for (Index k = 0; k < v.size(); ++k) v[k] = j[k].get<double>();
    return v;
}

inline Json bounds_to_json(const ConstraintSet& set) {
    switch (set.kind()) {
        case ConstraintSet::Kind::Unbounded:
            return nullptr;
        case ConstraintSet::Kind::Box:
            return Json{{"lower", to_json(set.lower())}, {"upper", to_json(set.upper())}};
        case ConstraintSet::Kind::Custom:
            throw FileFormatError("custom constraint sets are not serializable");
    }
    return nullptr;
}

inline ConstraintSet bounds_from_json(const Json& j) {
    if (j.is_null()) return ConstraintSet::unbounded();
    return ConstraintSet::box(vector_from(j.at("lower"), "bounds.lower"),
                              vector_from(j.at("upper"), "bounds.upper"));
}

}  // namespace iodetail

struct ProblemFile {
    MpcProblem problem;
    Partition partition;
    Json metadata;  // free-form provenance (generator spec, seed, ...)
};

inline void save_problem(const std::string& path, const MpcProblem& p, const Partition& part,
                         const Json& metadata = Json::object()) {
    Json j;
    j["A"] = iodetail::to_json(p.system.A);
    j["B"] = iodetail::to_json(p.system.B);
    j["N"] = p.horizon;
    j["Q"] = iodetail::to_json(p.Q);
    j["R"] = iodetail::to_json(p.R);
    Json rx = Json::array(), ru = Json::array();
    for (const auto& r : p.x_refs) rx.push_back(iodetail::to_json(r));
    for (const auto& r : p.u_refs) ru.push_back(iodetail::to_json(r));
    j["r_x"] = std::move(rx);
    j["r_u"] = std::move(ru);
    j["x1"] = iodetail::to_json(p.x1);
    j["xbounds"] = iodetail::bounds_to_json(p.state_set);
    j["ubounds"] = iodetail::bounds_to_json(p.input_set);
    j["partition"] = Json{{"xdims", part.xdims}, {"udims", part.udims}};
    if (!metadata.empty()) j["metadata"] = metadata;

    std::ofstream out(path);
    if (!out) throw FileFormatError("cannot open " + path + " for writing");
    out << std::setprecision(17) << j.dump(2) << "\n";
}

inline ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw FileFormatError(std::string("parse error in ") + path + ": " + e.what());
    }

    ProblemFile file;
    auto& p = file.problem;
    try {
        p.system.A = iodetail::matrix_from(j.at("A"), "A");
        p.system.B = iodetail::matrix_from(j.at("B"), "B");
        p.horizon = j.at("N").get<Index>();
        p.Q = iodetail::matrix_from(j.at("Q"), "Q");
        p.R = iodetail::matrix_from(j.at("R"), "R");
        for (const auto& r : j.at("r_x")) p.x_refs.push_back(iodetail::vector_from(r, "r_x"));
        for (const auto& r : j.at("r_u")) p.u_refs.push_back(iodetail::vector_from(r, "r_u"));
        p.x1 = iodetail::vector_from(j.at("x1"), "x1");
        p.state_set = iodetail::bounds_from_json(j.value("xbounds", Json()));
        p.input_set = iodetail::bounds_from_json(j.value("ubounds", Json()));

        const auto& part = j.at("partition");
        for (const auto& d : part.at("xdims")) file.partition.xdims.push_back(d.get<Index>());
        for (const auto& d : part.at("udims")) file.partition.udims.push_back(d.get<Index>());
        if (j.contains("metadata")) file.metadata = j["metadata"];
    } catch (const Json::exception& e) {
        throw FileFormatError(std::string("malformed problem file ") + path + ": " + e.what());
    }

    p.validate();
    file.partition.validate_for(p.system);
    return file;
}

inline void save_solution(const std::string& path, const Trajectory& traj,
                          const Json& metadata = Json::object()) {
    Json j;
    Json xs = Json::array(), us = Json::array();
    for (const auto& x : traj.xs) xs.push_back(iodetail::to_json(x));
    for (const auto& u : traj.us) us.push_back(iodetail::to_json(u));
    j["x"] = std::move(xs);
    j["u"] = std::move(us);
    if (!metadata.empty()) j["metadata"] = metadata;
    std::ofstream out(path);
    if (!out) throw FileFormatError("cannot open " + path + " for writing");
    out << std::setprecision(17) << j.dump(2) << "\n";
}

inline Trajectory load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open " + path);
    Json j;
    in >> j;
    Trajectory traj;
    for (const auto& x : j.at("x")) traj.xs.push_back(iodetail::vector_from(x, "x"));
    for (const auto& u : j.at("u")) traj.us.push_back(iodetail::vector_from(u, "u"));
    return traj;
}

/// CSV with a leading '# key=value ...' metadata comment line.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns,
              const std::vector<std::pair<std::string, std::string>>& metadata = {})
        : out_(path) {
        if (!out_) throw FileFormatError("cannot open " + path + " for writing");
        if (!metadata.empty()) {
            out_ << "#";
            for (const auto& [k, v] : metadata) out_ << " " << k << "=" << v;
            out_ << "\n";
        }
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        out_ << std::setprecision(12);
    }

    template <typename... Ts>
    void row(Ts&&... values) {
        bool first = true;
        ((out_ << (first ? "" : ",") << values, first = false), ...);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

inline void write_trace_csv(const std::string& path, const std::vector<IterTrace>& trace,
                            const std::vector<std::pair<std::string, std::string>>& metadata) {
    CsvWriter csv(path, {"iter", "r_zeta", "r_eps", "objective", "dist", "cum_ops"}, metadata);
    for (const auto& t : trace) csv.row(t.iter, t.r_zeta, t.r_eps, t.objective, t.dist, t.cum_ops);
}

}  // namespace sxadmm

#endif  // SXADMM_IO_HPP_
