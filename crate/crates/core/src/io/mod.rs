//! Text file formats: data sets, Fresnel import, indicator rasters and
//! command-line settings.

mod config;
mod dataset;
mod fresnel;
mod raster;

pub use config::{KeySpec, Settings};
pub use dataset::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_MAGIC};
pub use fresnel::{
    import_fresnel, read_fresnel_records, records_to_dataset, ColumnMap, FresnelConvention, FresnelImport,
    FresnelRecord, FRESNEL_RX_RADIUS, FRESNEL_TX_RADIUS,
};
pub use raster::{load_map, read_map, save_map, save_pgm, write_map, write_pgm, MAP_MAGIC};
