#ifndef VISCO2D_MSH_IO_HPP
#define VISCO2D_MSH_IO_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "visco2d/mesh.hpp"

namespace visco2d {

// Physical-tag numbering used by write_msh and the default read config.
inline std::map<int, BoundaryTag> default_msh_tag_map() {
    return {{1, BoundaryTag::square_top},
            {2, BoundaryTag::square_walls_floor},
            {3, BoundaryTag::annulus_inner},
            {4, BoundaryTag::annulus_outer}};
}

inline int msh_physical_tag(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::square_top: return 1;
        case BoundaryTag::square_walls_floor: return 2;
        case BoundaryTag::annulus_inner: return 3;
        case BoundaryTag::annulus_outer: return 4;
        case BoundaryTag::interior: break;
    }
    return 0;
}

class MshParseError : public std::runtime_error {
  public:
    MshParseError(const std::string& path, int line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

// MSH ASCII version 2.2 reader ($Nodes / $Elements; 2-node lines carry
// boundary tags, 3-node triangles are cells).  Version 4 files are
// rejected.  z-coordinates must be 0.
inline Mesh read_msh(const std::string& path,
                     const std::map<int, BoundaryTag>& tag_map =
                         default_msh_tag_map()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_msh: cannot open " + path);

    Mesh m;
    std::map<long, int> node_id;           // file node id -> vertex index
    std::map<std::array<int, 2>, BoundaryTag> edge_tags;
    std::string line;
    int lineno = 0;
    const auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++lineno;
        return true;
    };

    while (next_line()) {
        if (line.empty() || line[0] != '$') continue;
        const std::string section = line.substr(1);
        if (section == "MeshFormat") {
            if (!next_line()) throw MshParseError(path, lineno, "truncated $MeshFormat");
            std::istringstream ss(line);
            std::string version;
            ss >> version;
            if (version != "2.2")
                throw MshParseError(path, lineno,
                                    "unsupported MSH version '" + version +
                                        "' (only 2.2 is supported)");
            if (!next_line() || line != "$EndMeshFormat")
                throw MshParseError(path, lineno, "expected $EndMeshFormat");
        } else if (section == "Nodes") {
            if (!next_line()) throw MshParseError(path, lineno, "truncated $Nodes");
            long count = 0;
            try {
                count = std::stol(line);
            } catch (...) {
                throw MshParseError(path, lineno, "malformed node count");
            }
            for (long i = 0; i < count; ++i) {
                if (!next_line()) throw MshParseError(path, lineno, "truncated $Nodes");
                std::istringstream ss(line);
                long id;
                double x, y, z;
                if (!(ss >> id >> x >> y >> z))
                    throw MshParseError(path, lineno, "malformed node record");
                if (z != 0.0)
                    throw MshParseError(path, lineno,
                                        "nonzero z-coordinate (2D meshes only)");
                node_id[id] = m.n_vertices();
                m.vertices.push_back({x, y});
            }
            if (!next_line() || line != "$EndNodes")
                throw MshParseError(path, lineno, "expected $EndNodes");
        } else if (section == "Elements") {
            if (!next_line()) throw MshParseError(path, lineno, "truncated $Elements");
            long count = 0;
            try {
                count = std::stol(line);
            } catch (...) {
                throw MshParseError(path, lineno, "malformed element count");
            }
            const auto vertex_of = [&](long id) {
                auto it = node_id.find(id);
                if (it == node_id.end())
                    throw MshParseError(path, lineno,
                                        "element references unknown node " +
                                            std::to_string(id));
                return it->second;
            };
            for (long i = 0; i < count; ++i) {
                if (!next_line()) throw MshParseError(path, lineno, "truncated $Elements");
                std::istringstream ss(line);
                long id;
                int type, ntags;
                if (!(ss >> id >> type >> ntags))
                    throw MshParseError(path, lineno, "malformed element record");
                int phys = 0;
                for (int t = 0; t < ntags; ++t) {
                    int tag;
                    if (!(ss >> tag))
                        throw MshParseError(path, lineno, "malformed element tags");
                    if (t == 0) phys = tag;
                }
                if (type == 1) {
                    long a, b;
                    if (!(ss >> a >> b))
                        throw MshParseError(path, lineno, "malformed line element");
                    int va = vertex_of(a), vb = vertex_of(b);
                    if (va > vb) std::swap(va, vb);
                    auto it = tag_map.find(phys);
                    if (it == tag_map.end())
                        throw MshParseError(path, lineno,
                                            "line element with unmapped physical tag " +
                                                std::to_string(phys));
                    edge_tags[{va, vb}] = it->second;
                } else if (type == 2) {
                    long a, b, c;
                    if (!(ss >> a >> b >> c))
                        throw MshParseError(path, lineno, "malformed triangle element");
                    std::array<int, 3> cell{vertex_of(a), vertex_of(b), vertex_of(c)};
                    const Vec2 p = m.vertices[cell[0]], q = m.vertices[cell[1]],
                               s = m.vertices[cell[2]];
                    if ((q.x - p.x) * (s.y - p.y) - (q.y - p.y) * (s.x - p.x) < 0.0)
                        std::swap(cell[1], cell[2]);
                    m.cells.push_back(cell);
                } else {
                    throw MshParseError(path, lineno,
                                        "unsupported element type " +
                                            std::to_string(type));
                }
            }
            if (!next_line() || line != "$EndElements")
                throw MshParseError(path, lineno, "expected $EndElements");
        } else {
            // skip unknown section
            const std::string end = "$End" + section;
            while (next_line() && line != end) {}
        }
    }
    if (m.vertices.empty() || m.cells.empty())
        throw std::runtime_error("read_msh: " + path + " has no mesh data");

    finalize_mesh(m, [&](int a, int b) {
        auto it = edge_tags.find({a, b});
        if (it == edge_tags.end())
            throw std::runtime_error("read_msh: " + path +
                                     ": boundary edge without a tagged line element");
        return it->second;
    });
    return m;
}

inline void write_msh(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_msh: cannot open " + path);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << "$Nodes\n" << m.n_vertices() << "\n";
    char buf[80];
    for (int v = 0; v < m.n_vertices(); ++v) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g 0\n", v + 1,
                      m.vertices[v].x, m.vertices[v].y);
        out << buf;
    }
    out << "$EndNodes\n$Elements\n";
    std::vector<int> bedges;
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.boundary_tags[e] != BoundaryTag::interior) bedges.push_back(e);
    out << bedges.size() + m.cells.size() << "\n";
    int id = 1;
    for (int e : bedges) {
        const int phys = msh_physical_tag(m.boundary_tags[e]);
        out << id++ << " 1 2 " << phys << " " << phys << " "
            << m.edges[e][0] + 1 << " " << m.edges[e][1] + 1 << "\n";
    }
    for (const auto& c : m.cells)
        out << id++ << " 2 2 0 0 " << c[0] + 1 << " " << c[1] + 1 << " "
            << c[2] + 1 << "\n";
    out << "$EndElements\n";
}

// Plain-text dump: one vertex per line, one cell per line, one tagged
// boundary edge per line.  Used for round-trip tests and debugging.
inline void write_mesh_txt(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_mesh_txt: cannot open " + path);
    char buf[80];
    out << "vertices " << m.n_vertices() << "\n";
    for (const auto& v : m.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
        out << buf;
    }
    out << "cells " << m.n_cells() << "\n";
    for (const auto& c : m.cells)
        out << c[0] << " " << c[1] << " " << c[2] << "\n";
    out << "boundary";
    std::vector<int> bedges;
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.boundary_tags[e] != BoundaryTag::interior) bedges.push_back(e);
    out << " " << bedges.size() << "\n";
    for (int e : bedges)
        out << m.edges[e][0] << " " << m.edges[e][1] << " "
            << to_string(m.boundary_tags[e]) << "\n";
}

inline Mesh read_mesh_txt(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_mesh_txt: cannot open " + path);
    std::string kw;
    int count;
    Mesh m;
    if (!(in >> kw >> count) || kw != "vertices")
        throw std::runtime_error("read_mesh_txt: expected 'vertices <n>'");
    m.vertices.resize(count);
    for (auto& v : m.vertices)
        if (!(in >> v.x >> v.y))
            throw std::runtime_error("read_mesh_txt: malformed vertex");
    if (!(in >> kw >> count) || kw != "cells")
        throw std::runtime_error("read_mesh_txt: expected 'cells <n>'");
    m.cells.resize(count);
    for (auto& c : m.cells)
        if (!(in >> c[0] >> c[1] >> c[2]))
            throw std::runtime_error("read_mesh_txt: malformed cell");
    if (!(in >> kw >> count) || kw != "boundary")
        throw std::runtime_error("read_mesh_txt: expected 'boundary <n>'");
    std::map<std::array<int, 2>, std::string> tags;
    for (int i = 0; i < count; ++i) {
        int a, b;
        std::string name;
        if (!(in >> a >> b >> name))
            throw std::runtime_error("read_mesh_txt: malformed boundary edge");
        if (a > b) std::swap(a, b);
        tags[{a, b}] = name;
    }
    const auto tag_from_name = [](const std::string& n) {
        for (BoundaryTag t : {BoundaryTag::square_top, BoundaryTag::square_walls_floor,
                              BoundaryTag::annulus_inner, BoundaryTag::annulus_outer})
            if (n == to_string(t)) return t;
        throw std::runtime_error("read_mesh_txt: unknown boundary tag " + n);
    };
    finalize_mesh(m, [&](int a, int b) {
        auto it = tags.find({a, b});
        if (it == tags.end())
            throw std::runtime_error("read_mesh_txt: untagged boundary edge");
        return tag_from_name(it->second);
    });
    return m;
}

}  // namespace visco2d

#endif
