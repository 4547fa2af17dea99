//! Build a sweep table through the batch front end and write it as CSV, the
//! same output `entanglecert sweep --grid 0:1:11 --state mixed:0.2` produces.

use entanglecert::cli::{emit, parse_config, run_command};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(
        r#"
        command = "sweep"
        state = "mixed:0.2"
        grid = "0:1:11"
        tests = ["witness", "chsh"]
        "#,
    )?;
    let table = run_command(&config)?;
    emit(&table, config.format, &mut std::io::stdout().lock())?;
    Ok(())
}
