#pragma once

#include "greenzonal/error.hpp"
#include "greenzonal/geo_model.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/ascii_grid.hpp"
#include "greenzonal/geotiff.hpp"
#include "greenzonal/raster_io.hpp"
#include "greenzonal/zone.hpp"
#include "greenzonal/zone_mask.hpp"
#include "greenzonal/ndvi.hpp"
#include "greenzonal/zonal.hpp"
#include "greenzonal/published_tables.hpp"
#include "greenzonal/catalog.hpp"
#include "greenzonal/png.hpp"
#include "greenzonal/store.hpp"
#include "greenzonal/service.hpp"
#include "greenzonal/cli.hpp"
