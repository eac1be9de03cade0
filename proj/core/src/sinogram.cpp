#include "phaseless/sinogram.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "phaseless/csv.hpp"

namespace phaseless {

const char* to_string(RayStatus s) {
    switch (s) {
        case RayStatus::unscattered: return "unscattered";
        case RayStatus::recovered: return "recovered";
        case RayStatus::failed: return "failed";
    }
    return "failed";
}

RayStatus ray_status_from_string(const std::string& s) {
    if (s == "unscattered") return RayStatus::unscattered;
    if (s == "recovered") return RayStatus::recovered;
    if (s == "failed") return RayStatus::failed;
    throw ConfigError("unknown ray status '" + s + "'");
}

Sinogram::Sinogram(const Slice& s, const ChordGrid& grid)
    : slice(s),
      alphas(grid.alphas),
      offsets(grid.offsets),
      psi(grid.size(), 0.0),
      fill_mask(grid.size(), 0),
      status(grid.size(), RayStatus::recovered) {}

double Sinogram::alpha_step() const { return alphas.size() > 1 ? alphas[1] - alphas[0] : alphas.at(0); }

double Sinogram::offset_step() const { return offsets.size() > 1 ? offsets[1] - offsets[0] : 2.0 * slice.B_a; }

void write_sinogram(const std::string& path, const Sinogram& s) {
    ensure_parent_directory(path);
    std::ofstream out(path);
    if (!out) throw Error("write_sinogram: cannot open '" + path + "'");
    out << "slice_a,alpha,d,psi,status\n";
    const std::string a = format_double(s.slice.a);
    for (size_t i = 0; i < s.n_alpha(); ++i)
        for (size_t j = 0; j < s.n_offset(); ++j) {
            const size_t idx = i * s.n_offset() + j;
            out << a << ',' << format_double(s.alphas[i]) << ',' << format_double(s.offsets[j]) << ','
                << format_double(s.psi[idx]) << ',' << to_string(s.status[idx]) << '\n';
        }
}

Sinogram read_sinogram(const std::string& path, double B) {
    const CsvTable t = read_csv(path);
    const size_t ca = t.column("slice_a"), cal = t.column("alpha"), cd = t.column("d"), cp = t.column("psi"),
                 cs = t.column("status");
    if (t.rows.empty()) throw ConfigError("sinogram: no rows in '" + path + "'");

    ChordGrid grid;
    std::map<double, size_t> seen_offsets;
    for (const auto& row : t.rows) {
        const double al = parse_double(row[cal]);
        if (grid.alphas.empty() || grid.alphas.back() != al) grid.alphas.push_back(al);
        const double d = parse_double(row[cd]);
        if (grid.alphas.size() == 1 && !seen_offsets.count(d)) {
            seen_offsets[d] = grid.offsets.size();
            grid.offsets.push_back(d);
        }
    }
    if (grid.size() != t.rows.size()) throw ConfigError("sinogram: rows do not form a complete (alpha, d) grid");

    Sinogram s(Slice::make(parse_double(t.rows[0][ca]), B), grid);
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const size_t j = r % grid.offsets.size();
        if (parse_double(row[cal]) != grid.alphas[r / grid.offsets.size()] || parse_double(row[cd]) != grid.offsets[j])
            throw ConfigError("sinogram: rows must be alpha-major with a repeated offset list");
        s.psi[r] = parse_double(row[cp]);
        s.status[r] = ray_status_from_string(row[cs]);
        s.fill_mask[r] = s.status[r] == RayStatus::failed ? 1 : 0;
    }
    return s;
}

}  // namespace phaseless
