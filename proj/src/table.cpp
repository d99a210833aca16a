#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "hfx/errors.hpp"
#include "hfx/table.hpp"

namespace hfx {

namespace {

const char* kColumns =
    "site_index,species,isotope,region,x_A,y_A,z_A,distance_A,"
    "a_xx,a_xy,a_xz,a_yx,a_yy,a_yz,a_zx,a_zy,a_zz,"
    "fc,contact_present,one_center_present,A_zz,A_z";
constexpr int kNumericColumns = 4 + 9 + 1 + 2; // positions/distance, tensor, fc, axis scalars

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, sep)) {
        const size_t a = cur.find_first_not_of(" \t\r");
        const size_t b = cur.find_last_not_of(" \t\r");
        fields.push_back(a == std::string::npos ? std::string() : cur.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == sep) fields.push_back(std::string());
    return fields;
}

double num(const std::string& s, int lineno, const char* what) {
    try {
        size_t pos = 0;
        const double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) + ": bad " +
                                       std::string(what) + " '" + s + "'");
    }
}

} // namespace

void write_tensor_table(std::ostream& out, const TableMeta& meta, std::vector<SiteResult> rows) {
    std::sort(rows.begin(), rows.end(), [](const SiteResult& a, const SiteResult& b) {
        return std::tie(a.distance, a.site_index) < std::tie(b.distance, b.site_index);
    });
    const double scale = meta.unit == "kHz" ? 1e3 : 1.0;

    out << "# tensor-table v1\n";
    out << "# unit = " << meta.unit << "\n";
    out << "# lattice_parameter_A = " << fmt(meta.lattice_parameter) << "\n";
    out << "# grid_dims = " << meta.grid_dims[0] << " " << meta.grid_dims[1] << " "
        << meta.grid_dims[2] << "\n";
    out << "# backend = " << meta.backend << "\n";
    out << "# exclusion = " << meta.exclusion << "\n";
    out << "# constants_version = " << meta.constants_version << "\n";
    out << "# axis = " << fmt(meta.axis[0]) << " " << fmt(meta.axis[1]) << " "
        << fmt(meta.axis[2]) << "\n";
    out << "# defect_center_A = " << fmt(meta.defect_center[0]) << " "
        << fmt(meta.defect_center[1]) << " " << fmt(meta.defect_center[2]) << "\n";
    out << kColumns << "\n";

    for (const SiteResult& r : rows) {
        const Mat3 a = r.a_mhz.mat() * scale;
        out << r.site_index << ',' << r.species << ',' << r.isotope << ','
            << (r.in_cell ? "in_cell" : "support") << ',' << fmt(r.pos[0]) << ','
            << fmt(r.pos[1]) << ',' << fmt(r.pos[2]) << ',' << fmt(r.distance);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out << ',' << fmt(a(i, j));
        out << ',' << fmt(r.fc_mhz * scale) << ',' << (r.contact_present ? 1 : 0) << ','
            << (r.one_center_present ? 1 : 0) << ',' << fmt(r.a_zz_mhz * scale) << ','
            << fmt(r.a_z_mhz * scale) << "\n";
    }
}

TensorTable read_tensor_table(std::istream& in) {
    TensorTable table;
    std::string line;
    int lineno = 0;
    bool saw_marker = false;
    bool saw_columns = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        if (line[0] == '#') {
            std::string body = line.substr(1);
            const size_t a = body.find_first_not_of(" \t");
            body = a == std::string::npos ? std::string() : body.substr(a);
            if (body == "tensor-table v1") {
                saw_marker = true;
                continue;
            }
            const size_t eq = body.find('=');
            if (eq == std::string::npos) continue; // free-form comment
            auto trim = [](std::string s) {
                const size_t x = s.find_first_not_of(" \t");
                if (x == std::string::npos) return std::string();
                const size_t y = s.find_last_not_of(" \t");
                return s.substr(x, y - x + 1);
            };
            const std::string key = trim(body.substr(0, eq));
            const std::string val = trim(body.substr(eq + 1));
            if (key == "unit") {
                table.meta.unit = val;
            } else if (key == "lattice_parameter_A") {
                table.meta.lattice_parameter = num(val, lineno, "lattice parameter");
            } else if (key == "grid_dims") {
                const auto t = split(val, ' ');
                std::vector<std::string> nz;
                for (const auto& s : t)
                    if (!s.empty()) nz.push_back(s);
                if (nz.size() != 3)
                    throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) +
                                                   ": grid_dims needs 3 integers");
                for (int d = 0; d < 3; ++d)
                    table.meta.grid_dims[d] = int(num(nz[d], lineno, "grid dim"));
            } else if (key == "backend") {
                table.meta.backend = val;
            } else if (key == "exclusion") {
                table.meta.exclusion = val;
            } else if (key == "constants_version") {
                table.meta.constants_version = val;
            } else if (key == "axis" || key == "defect_center_A") {
                const auto t = split(val, ' ');
                std::vector<std::string> nz;
                for (const auto& s : t)
                    if (!s.empty()) nz.push_back(s);
                if (nz.size() != 3)
                    throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) +
                                                   ": " + key + " needs 3 numbers");
                Vec3 v(num(nz[0], lineno, key.c_str()), num(nz[1], lineno, key.c_str()),
                       num(nz[2], lineno, key.c_str()));
                (key == "axis" ? table.meta.axis : table.meta.defect_center) = v;
            }
            continue;
        }

        if (!saw_columns) {
            if (!saw_marker)
                throw_parse("NotComputed", "not a tensor table: missing '# tensor-table v1'");
            if (line != kColumns)
                throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) +
                                               ": unexpected column header");
            saw_columns = true;
            continue;
        }

        const auto f = split(line, ',');
        if (f.size() != 4 + size_t(kNumericColumns) + 2)
            throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) + ": expected " +
                                           std::to_string(4 + kNumericColumns + 2) +
                                           " columns, got " + std::to_string(f.size()));
        SiteResult r;
        r.site_index = int(num(f[0], lineno, "site index"));
        r.species = f[1];
        r.isotope = f[2];
        if (f[3] == "in_cell") {
            r.in_cell = true;
        } else if (f[3] == "support") {
            r.in_cell = false;
        } else {
            throw_parse("NotComputed", "tensor table line " + std::to_string(lineno) +
                                           ": region must be in_cell or support");
        }
        r.pos = Vec3(num(f[4], lineno, "x"), num(f[5], lineno, "y"), num(f[6], lineno, "z"));
        r.distance = num(f[7], lineno, "distance");
        Mat3 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = num(f[8 + 3 * i + j], lineno, "tensor entry");
        r.a_mhz = Sym3::from_mat(0.5 * (a + a.transpose()));
        r.fc_mhz = num(f[17], lineno, "fc");
        r.contact_present = num(f[18], lineno, "contact_present") != 0;
        r.one_center_present = num(f[19], lineno, "one_center_present") != 0;
        r.a_zz_mhz = num(f[20], lineno, "A_zz");
        r.a_z_mhz = num(f[21], lineno, "A_z");
        table.rows.push_back(std::move(r));
    }

    if (!saw_marker)
        throw_parse("NotComputed", "not a tensor table: missing '# tensor-table v1'");
    if (table.meta.unit != "MHz" && table.meta.unit != "kHz")
        throw_parse("NotComputed", "tensor table unit must be MHz or kHz");
    if (table.meta.unit == "kHz") {
        for (SiteResult& r : table.rows) {
            r.a_mhz = r.a_mhz * 1e-3;
            r.fc_mhz *= 1e-3;
            r.a_zz_mhz *= 1e-3;
            r.a_z_mhz *= 1e-3;
        }
        table.meta.unit = "MHz";
    }
    return table;
}

} // namespace hfx
