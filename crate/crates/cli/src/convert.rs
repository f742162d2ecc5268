use std::path::Path;

use capdrop_core::analytic::{revolve, DelaunayProfile};
use capdrop_core::geom::io::{self, IoError, MeshFormat};

use crate::CliError;

fn is_csv(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Converts between OBJ, PLY and CSV profiles. A profile is revolved with `angular`
/// meridians when the output is a mesh.
pub fn convert(input: &Path, output: &Path, angular: usize) -> Result<(), CliError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|source| CliError::File { path: p.to_path_buf(), source });
    if is_csv(input) {
        let profile = DelaunayProfile::from_csv(&read(input)?)?;
        if is_csv(output) {
            let path = output.to_path_buf();
            return std::fs::write(output, profile.to_csv()).map_err(|source| CliError::File { path, source });
        }
        MeshFormat::from_path(output)?;
        io::write_mesh(output, &revolve(&profile, angular))?;
        return Ok(());
    }
    MeshFormat::from_path(input)?;
    if is_csv(output) {
        return Err(
            IoError::UnknownFormat(format!("{}: a mesh cannot be written as a profile", output.display())).into()
        );
    }
    MeshFormat::from_path(output)?;
    io::write_mesh(output, &io::read_mesh(input)?)?;
    Ok(())
}
