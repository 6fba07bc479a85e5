#pragma once

#include "cdn/copula.hpp"
#include "cdn/domain.hpp"
#include "cdn/dsp.hpp"
#include "cdn/error.hpp"
#include "cdn/function.hpp"
#include "cdn/gaussian_cdf.hpp"
#include "cdn/graph.hpp"
#include "cdn/model_io.hpp"
#include "cdn/grid_function.hpp"
#include "cdn/normal.hpp"
#include "cdn/oracle.hpp"
#include "cdn/table_function.hpp"
#include "cdn/validity.hpp"
