//! Dataset readers and writers, machine-state labeling, and vibration/process alignment.

pub mod align;
pub mod labeling;
pub mod pharma;
pub mod process;
pub mod time;
pub mod triaxial;

pub use align::{align_and_impute, align_feature_rows, AlignedDataset};
pub use labeling::{
    default_abnormal_dates, label_process_rows, machine_state, LabeledProcessRow, LabelingConfig,
    WeekTime, WeeklyInterval, WeeklySchedule,
};
pub use pharma::{parse_pharma_reader, parse_pharma_txt, write_pharma_txt, PharmaRecord, PHARMA_POINTS};
pub use process::{
    check_cadence, parse_process_csv, parse_process_reader, write_process_csv, Cadence, ProcessRow,
    MEASUREMENT_COLUMNS, PROCESS_INTERVAL_S,
};
pub use time::{format_timestamp, parse_timestamp, DEFAULT_TZ};
pub use triaxial::{parse_triaxial_csv, parse_triaxial_reader, write_triaxial_csv, TriaxialOptions};
