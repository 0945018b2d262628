//! Gnuplot scripts written next to the CSV outputs.

use crate::config::Command;

pub const SCRIPT_NAME: &str = "plot.gp";

/// Plotting commands for the files a command produces. Run from the
/// output directory with `gnuplot plot.gp`.
pub fn script(command: Command) -> String {
    let body = match command {
        Command::Convergence => {
            "set terminal pngcairo size 900,600\n\
             set output 'errors.png'\n\
             set logscale xy\n\
             set xlabel 'N'\n\
             set ylabel 'root mean square error'\n\
             f(x) = a * x**(-b)\n\
             a = 1; b = 0.5\n\
             fit log(f(x)) 'errors.csv' using 2:(log(sqrt($5))) skip 1 via a, b\n\
             plot 'errors.csv' using 2:(sqrt($5)) skip 1 with linespoints title 'max_k |e_k|', \\\n\
             \x20    'errors.csv' using 2:(sqrt($7)) skip 1 with linespoints title 'V-sum', \\\n\
             \x20    f(x) with lines dashtype 2 title sprintf('fit N^{-%.2f}', b)\n"
        }
        Command::Constants => {
            "# constants.csv is a table; print it\n\
             print system('column -s, -t constants.csv')\n"
        }
        Command::Diagnostics => {
            "set terminal pngcairo size 900,600\n\
             set output 'complement_probability.png'\n\
             set logscale x\n\
             set xlabel 'M'\n\
             set ylabel 'P(leave localization set)'\n\
             plot '< grep complement_probability moments.csv' using 1:3 with linespoints title 'grad_sup'\n"
        }
        Command::SingleRun => {
            "set terminal pngcairo size 900,600\n\
             set output 'trajectory.png'\n\
             set xlabel 't'\n\
             set ylabel 'norm'\n\
             plot 'trajectory.csv' using 2:3 skip 1 with lines title '|u|_{L2}', \\\n\
             \x20    'trajectory.csv' using 2:4 skip 1 with lines title '|grad u|_{L2}'\n"
        }
    };
    format!("set datafile separator ','\n{body}")
}
