// Driving the workbench from a JSON config, as the `cfw` binary does.

use cf_workbench::workbench::{parse_config, run as run_command, Command};

const CONFIG: &str = r#"{
  "tower": {
    "kind": "rigid-discrete",
    "group": { "kind": "free-abelian", "rank": 1 },
    "sequence": { "kind": "powers", "base": 3, "from": 1, "to": 29 },
    "d": [1],
    "depth": 4
  },
  "rigidity": {},
  "diamond": { "gen": [{ "ps": [2, 3, 5], "cap": 100 }] }
}"#;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config(CONFIG)?;
    for report in run_command(&cfg, Command::All)? {
        print!("{}", report.summary());
        for t in &report.tables {
            println!("  {}: {}", t.name, t.header.join(","));
            for r in &t.rows {
                println!("  {}", r.join(","));
            }
        }
    }
    let err = parse_config(r#"{"tower": {"kind": "aux", "p": 2, "depth": 1}}"#).unwrap_err();
    print!("rejected:\n{err}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
