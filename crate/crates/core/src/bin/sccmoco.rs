use sccmoco::cli::{exit_code, run};
use sccmoco::Error;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Err(e) = run(std::env::args_os()) else {
        return;
    };
    let code = match &e {
        Error::Usage(m) if m.is_empty() => 0,
        Error::Usage(m) => {
            eprintln!("{}", m.trim_end());
            2
        }
        e => {
            eprintln!("error: {e}");
            exit_code(e)
        }
    };
    std::process::exit(code);
}
