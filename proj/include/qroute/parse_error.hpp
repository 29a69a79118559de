#pragma once

#include <stdexcept>
#include <string>

namespace qroute {

/// Position-carrying error shared by the text readers (QASM, graph files).
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line, col;
};

} // namespace qroute
