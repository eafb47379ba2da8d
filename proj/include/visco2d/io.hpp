#ifndef VISCO2D_IO_HPP
#define VISCO2D_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco2d/space.hpp"

namespace visco2d {

// ---------------------------------------------------------------------------
// VTK legacy ASCII writer (UNSTRUCTURED_GRID, triangle cells, POINT_DATA).
// Fields are sampled at mesh vertices; with refined = true every cell is
// split into four through the edge midpoints so P2 detail is visible.
// ---------------------------------------------------------------------------
struct VtkField {
    std::string name;
    const FEFunction* f = nullptr;
};

namespace detail {

// Nodal value of a field at a vertex or edge-midpoint sample point.
// P1 fields are averaged along the edge; P2 fields own the midpoint node.
inline void vtk_sample(const FEFunction& f, const Mesh& m, int point,
                       double* out) {
    const FunctionSpace& s = *f.space;
    const int V = m.n_vertices();
    if (point < V || s.family == Family::P2) {
        for (int c = 0; c < s.ncomp; ++c)
            out[c] = f.coeffs[s.dof(point, c)];
        return;
    }
    const auto& e = m.edges[point - V];
    for (int c = 0; c < s.ncomp; ++c)
        out[c] = 0.5 * (f.coeffs[s.dof(e[0], c)] + f.coeffs[s.dof(e[1], c)]);
}

}  // namespace detail

inline void write_vtk(const std::string& path, const Mesh& m,
                      const std::vector<VtkField>& fields,
                      bool refined = false) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
    const int V = m.n_vertices();
    const int npts = refined ? V + m.n_edges() : V;
    const int ncells = refined ? 4 * m.n_cells() : m.n_cells();

    out << "# vtk DataFile Version 3.0\nvisco2d fields\nASCII\n"
        << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << npts << " double\n";
    char buf[128];
    const auto point_coord = [&](int p) -> Vec2 {
        if (p < V) return m.vertices[p];
        const auto& e = m.edges[p - V];
        return {0.5 * (m.vertices[e[0]].x + m.vertices[e[1]].x),
                0.5 * (m.vertices[e[0]].y + m.vertices[e[1]].y)};
    };
    for (int p = 0; p < npts; ++p) {
        const Vec2 v = point_coord(p);
        std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", v.x, v.y);
        out << buf;
    }
    out << "CELLS " << ncells << " " << 4 * ncells << "\n";
    if (!refined) {
        for (const auto& c : m.cells)
            out << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
    } else {
        for (int c = 0; c < m.n_cells(); ++c) {
            const auto& v = m.cells[c];
            const int mid[3] = {V + m.cell_edges[c][0], V + m.cell_edges[c][1],
                                V + m.cell_edges[c][2]};
            out << "3 " << v[0] << " " << mid[2] << " " << mid[1] << "\n";
            out << "3 " << v[1] << " " << mid[0] << " " << mid[2] << "\n";
            out << "3 " << v[2] << " " << mid[1] << " " << mid[0] << "\n";
            out << "3 " << mid[0] << " " << mid[1] << " " << mid[2] << "\n";
        }
    }
    out << "CELL_TYPES " << ncells << "\n";
    for (int c = 0; c < ncells; ++c) out << "5\n";

    out << "POINT_DATA " << npts << "\n";
    for (const auto& field : fields) {
        const FunctionSpace& s = *field.f->space;
        if (refined && s.family == Family::P1 && s.mesh != &m)
            throw std::invalid_argument("write_vtk: field mesh mismatch");
        double vals[3];
        switch (s.shape) {
            case ValueShape::scalar:
                out << "SCALARS " << field.name << " double 1\n"
                    << "LOOKUP_TABLE default\n";
                for (int p = 0; p < npts; ++p) {
                    detail::vtk_sample(*field.f, m, p, vals);
                    std::snprintf(buf, sizeof buf, "%.17g\n", vals[0]);
                    out << buf;
                }
                break;
            case ValueShape::vector2:
                out << "VECTORS " << field.name << " double\n";
                for (int p = 0; p < npts; ++p) {
                    detail::vtk_sample(*field.f, m, p, vals);
                    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", vals[0],
                                  vals[1]);
                    out << buf;
                }
                break;
            default:
                out << "TENSORS " << field.name << " double\n";
                for (int p = 0; p < npts; ++p) {
                    detail::vtk_sample(*field.f, m, p, vals);
                    const Mat2 t = expand_sym(s.shape, vals);
                    std::snprintf(buf, sizeof buf,
                                  "%.17g %.17g 0\n%.17g %.17g 0\n0 0 0\n",
                                  t(0, 0), t(0, 1), t(1, 0), t(1, 1));
                    out << buf;
                }
                break;
        }
    }
}

// Structural check of a legacy VTK file as written above: section order,
// counts, triangle cell types.  Returns an explanation on failure.
inline bool validate_vtk(const std::string& path, std::string* why = nullptr) {
    const auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    std::ifstream in(path);
    if (!in) return fail("cannot open " + path);
    std::string line, word;
    if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0)
        return fail("missing VTK header line");
    std::getline(in, line);  // title
    if (!std::getline(in, line) || line != "ASCII") return fail("not ASCII");
    if (!std::getline(in, line) || line != "DATASET UNSTRUCTURED_GRID")
        return fail("not an unstructured grid");
    long npts = 0;
    if (!(in >> word >> npts) || word != "POINTS") return fail("missing POINTS");
    in >> word;  // dtype
    for (long i = 0; i < 3 * npts; ++i) {
        double v;
        if (!(in >> v)) return fail("short POINTS section");
    }
    long ncells = 0, nints = 0;
    if (!(in >> word >> ncells >> nints) || word != "CELLS")
        return fail("missing CELLS");
    if (nints != 4 * ncells) return fail("CELLS size mismatch");
    for (long i = 0; i < ncells; ++i) {
        long k, a, b, c;
        if (!(in >> k >> a >> b >> c) || k != 3)
            return fail("non-triangle connectivity row");
        if (a < 0 || b < 0 || c < 0 || a >= npts || b >= npts || c >= npts)
            return fail("point index out of range");
    }
    long ntypes = 0;
    if (!(in >> word >> ntypes) || word != "CELL_TYPES" || ntypes != ncells)
        return fail("missing or mismatched CELL_TYPES");
    for (long i = 0; i < ntypes; ++i) {
        int t;
        if (!(in >> t) || t != 5) return fail("cell type is not triangle (5)");
    }
    long ndata = 0;
    if (!(in >> word >> ndata) || word != "POINT_DATA" || ndata != npts)
        return fail("missing or mismatched POINT_DATA");
    while (in >> word) {
        long per_point;
        if (word == "SCALARS") {
            std::string name, dtype;
            int comps;
            in >> name >> dtype >> comps;
            in >> word >> name;  // LOOKUP_TABLE default
            if (word != "LOOKUP_TABLE") return fail("missing LOOKUP_TABLE");
            per_point = comps;
        } else if (word == "VECTORS") {
            std::string name, dtype;
            in >> name >> dtype;
            per_point = 3;
        } else if (word == "TENSORS") {
            std::string name, dtype;
            in >> name >> dtype;
            per_point = 9;
        } else {
            return fail("unexpected section " + word);
        }
        for (long i = 0; i < per_point * npts; ++i) {
            double v;
            if (!(in >> v)) return fail("short data section");
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// CSV tables.  Every column is written twice: a 4-significant-digit
// display column and a full-precision <name>_full column, so parsing an
// emitted table reproduces the in-memory values exactly.
// ---------------------------------------------------------------------------
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& out, const CsvTable& t) {
    for (size_t c = 0; c < t.columns.size(); ++c)
        out << (c ? "," : "") << t.columns[c] << "," << t.columns[c] << "_full";
    out << "\n";
    char buf[64];
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw std::invalid_argument("write_csv: ragged row");
        for (size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.4g,%.17g", row[c], row[c]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    write_csv(out, t);
}

// Reads the full-precision columns back; display columns are dropped.
inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty input");
    std::stringstream hs(line);
    std::string cell;
    std::vector<bool> full;
    while (std::getline(hs, cell, ',')) {
        const bool is_full = cell.size() > 5 &&
                             cell.compare(cell.size() - 5, 5, "_full") == 0;
        full.push_back(is_full);
        if (is_full) t.columns.push_back(cell.substr(0, cell.size() - 5));
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c < full.size() && full[c]) row.push_back(std::stod(cell));
            ++c;
        }
        if (row.size() != t.columns.size())
            throw std::runtime_error("read_csv: ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    return read_csv(in);
}

}  // namespace visco2d

#endif
