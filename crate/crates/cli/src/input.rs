use std::path::Path;

use serde::de::DeserializeOwned;

use nodal_core::{Instance, KuramotoSystem, MatrixFile, SystemFile};

use crate::commands::Failure;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Deserializes with the JSON path of the first offending field in the error.
fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { "<root>".to_string() } else { field };
        Failure::io(format!("{}: field `{field}`: {}", path.display(), e.inner()))
    })
}

pub fn instance(path: &Path) -> Result<Instance, Failure> {
    let file: MatrixFile = parse(path, &read(path)?)?;
    Instance::from_file(file).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub fn system(path: &Path) -> Result<KuramotoSystem, Failure> {
    let file: SystemFile = parse(path, &read(path)?)?;
    KuramotoSystem::from_file(file).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}
