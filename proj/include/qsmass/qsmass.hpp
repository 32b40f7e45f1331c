#pragma once

#include "qsmass/errors.hpp"
#include "qsmass/sphere_grid.hpp"
#include "qsmass/chebyshev.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/uniformization.hpp"
#include "qsmass/ms_path.hpp"
#include "qsmass/bound.hpp"
#include "qsmass/optimize.hpp"
#include "qsmass/extension.hpp"
#include "qsmass/fillin.hpp"
#include "qsmass/io.hpp"
#include "qsmass/config.hpp"
#include "qsmass/pipeline.hpp"
