#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace amlrisk::detail {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path, path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace amlrisk::detail
