#ifndef EHYB_EHYB_HPP
#define EHYB_EHYB_HPP

#include "container.hpp"
#include "exec_engine.hpp"
#include "format.hpp"
#include "matrix_io.hpp"
#include "partitioner.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "types.hpp"

#endif // EHYB_EHYB_HPP
