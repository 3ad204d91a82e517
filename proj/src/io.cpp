#include "trajflow/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace trajflow {

namespace {

using json = nlohmann::json;

struct RawRow {
    TrajId id;
    double t;
    double x;
    double y;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" + s + "'");
    }
}

TrajId parse_id_field(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse track_id from '" + s + "'");
    }
}

LoadResult assemble_tracks(std::vector<RawRow> rows, const LoadOptions& opts) {
    std::map<TrajId, std::vector<RawRow>> by_id;
    for (auto& r : rows) by_id[r.id].push_back(r);

    LoadResult result;
    double dataset_dt = 0.0;
    for (auto& [id, track] : by_id) {
        std::stable_sort(track.begin(), track.end(),
                         [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
        if (track.size() < 2) {
            ++result.dropped_short_tracks;
            continue;
        }
        // infer dt from the median gap, then verify uniformity
        std::vector<double> gaps;
        gaps.reserve(track.size() - 1);
        for (std::size_t i = 0; i + 1 < track.size(); ++i) gaps.push_back(track[i + 1].t - track[i].t);
        std::vector<double> sorted = gaps;
        std::sort(sorted.begin(), sorted.end());
        const double dt = sorted[sorted.size() / 2];
        if (!(dt > 0.0)) {
            throw ValidationError("track " + std::to_string(id) + " has non-increasing timestamps");
        }
        for (double g : gaps) {
            if (std::abs(g - dt) > opts.dt_tolerance * dt) {
                throw ValidationError("track " + std::to_string(id) +
                                      " has non-uniform time step (expected " + format_double(dt) +
                                      ", found " + format_double(g) + ")");
            }
        }
        if (dataset_dt == 0.0) {
            dataset_dt = dt;
        } else if (std::abs(dt - dataset_dt) > opts.dt_tolerance * dataset_dt) {
            throw ValidationError("track " + std::to_string(id) + " dt " + format_double(dt) +
                                  " differs from dataset dt " + format_double(dataset_dt));
        }
        Trajectory traj;
        traj.id = id;
        traj.dt = dataset_dt;
        traj.points.reserve(track.size());
        for (const auto& r : track) traj.points.push_back({r.x, r.y});
        result.dataset.trajectories.push_back(std::move(traj));
    }
    result.dataset.recompute_bounds();
    return result;
}

LoadResult load_csv_like(const std::string& path, bool duke, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && !line.empty() && !std::isdigit(static_cast<unsigned char>(line[0])) &&
            line[0] != '-') {
            continue;  // header
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, found " +
                             std::to_string(fields.size()));
        }
        RawRow r;
        r.id = parse_id_field(fields[0], line_no);
        if (duke) {
            const double frame = parse_double_field(fields[1], line_no, "frame");
            r.t = frame / opts.fps;
        } else {
            r.t = parse_double_field(fields[1], line_no, "t");
        }
        r.x = parse_double_field(fields[2], line_no, "x");
        r.y = parse_double_field(fields[3], line_no, "y");
        rows.push_back(r);
    }
    return assemble_tracks(std::move(rows), opts);
}

LoadResult load_json(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError(path + ": expected a top-level array of trajectories");

    LoadResult result;
    double dataset_dt = 0.0;
    for (const auto& item : doc) {
        Trajectory traj;
        traj.id = item.at("id").get<TrajId>();
        traj.dt = item.at("dt").get<double>();
        for (const auto& p : item.at("points")) {
            traj.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        if (traj.points.size() < 2) {
            ++result.dropped_short_tracks;
            continue;
        }
        if (item.contains("parent_id")) {
            traj.parent_id = item.at("parent_id").get<TrajId>();
            traj.parent_range = IndexInterval{item.at("parent_begin").get<std::size_t>(),
                                              item.at("parent_end").get<std::size_t>()};
        }
        if (dataset_dt == 0.0) {
            dataset_dt = traj.dt;
        } else if (std::abs(traj.dt - dataset_dt) > opts.dt_tolerance * dataset_dt) {
            throw ValidationError("trajectory " + std::to_string(traj.id) + " dt differs from dataset dt");
        }
        result.dataset.trajectories.push_back(std::move(traj));
    }
    result.dataset.recompute_bounds();
    return result;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

TrajFormat format_from_name(const std::string& name) {
    if (name == "csv") return TrajFormat::csv;
    if (name == "json") return TrajFormat::json;
    if (name == "duke-frames") return TrajFormat::duke_frames;
    throw ValidationError("unknown trajectory format '" + name + "'");
}

LoadResult load_trajectories(const std::string& path, TrajFormat format, const LoadOptions& opts) {
    switch (format) {
        case TrajFormat::csv:
            return load_csv_like(path, false, opts);
        case TrajFormat::duke_frames:
            return load_csv_like(path, true, opts);
        case TrajFormat::json:
            return load_json(path, opts);
    }
    throw ValidationError("unknown format");
}

void save_trajectories(const Dataset& ds, const std::string& path, TrajFormat format) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    if (format == TrajFormat::csv || format == TrajFormat::duke_frames) {
        out << "track_id,t,x,y\n";
        for (const auto& t : ds.trajectories) {
            for (std::size_t i = 0; i < t.points.size(); ++i) {
                out << t.id << ',' << format_double(static_cast<double>(i) * t.dt) << ','
                    << format_double(t.points[i].x) << ',' << format_double(t.points[i].y) << '\n';
            }
        }
    } else {
        json doc = json::array();
        for (const auto& t : ds.trajectories) {
            json item;
            item["id"] = t.id;
            item["dt"] = t.dt;
            json pts = json::array();
            for (const auto& p : t.points) pts.push_back({p.x, p.y});
            item["points"] = std::move(pts);
            if (t.parent_id) {
                item["parent_id"] = *t.parent_id;
                item["parent_begin"] = t.parent_range->begin;
                item["parent_end"] = t.parent_range->end;
            }
            doc.push_back(std::move(item));
        }
        out << doc.dump(1) << '\n';
    }
    if (!out) throw ValidationError("write failed for " + path);
}

}  // namespace trajflow
